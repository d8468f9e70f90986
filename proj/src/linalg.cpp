#include "nnsos/linalg.hpp"

#include <algorithm>
#include <cmath>

namespace nnsos {

Mat Mat::identity(int n) {
  Mat I(n, n);
  for (int i = 0; i < n; ++i) I.at(i, i) = 1.0;
  return I;
}

Mat Mat::transposed() const {
  Mat T(cols, rows);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) T.at(j, i) = at(i, j);
  return T;
}

Mat matmul(const Mat& A, const Mat& B) {
  Mat C(A.rows, B.cols);
  for (int i = 0; i < A.rows; ++i) {
    const double* ai = A.row(i);
    double* ci = C.row(i);
    for (int k = 0; k < A.cols; ++k) {
      double aik = ai[k];
      if (aik == 0.0) continue;
      const double* bk = B.row(k);
      for (int j = 0; j < B.cols; ++j) ci[j] += aik * bk[j];
    }
  }
  return C;
}

Mat matmul_nt(const Mat& A, const Mat& B) {
  Mat C(A.rows, B.rows);
  for (int i = 0; i < A.rows; ++i) {
    const double* ai = A.row(i);
    double* ci = C.row(i);
    for (int j = 0; j < B.rows; ++j) {
      const double* bj = B.row(j);
      double s = 0.0;
      for (int k = 0; k < A.cols; ++k) s += ai[k] * bj[k];
      ci[j] = s;
    }
  }
  return C;
}

Mat matmul_tn(const Mat& A, const Mat& B) {
  Mat C(A.cols, B.cols);
  for (int k = 0; k < A.rows; ++k) {
    const double* ak = A.row(k);
    const double* bk = B.row(k);
    for (int i = 0; i < A.cols; ++i) {
      double aki = ak[i];
      if (aki == 0.0) continue;
      double* ci = C.row(i);
      for (int j = 0; j < B.cols; ++j) ci[j] += aki * bk[j];
    }
  }
  return C;
}

Vec matvec(const Mat& A, std::span<const double> x) {
  Vec y(static_cast<std::size_t>(A.rows), 0.0);
  for (int i = 0; i < A.rows; ++i) {
    const double* ai = A.row(i);
    double s = 0.0;
    for (int j = 0; j < A.cols; ++j) s += ai[j] * x[j];
    y[i] = s;
  }
  return y;
}

namespace {

// Unblocked lower Cholesky on the leading n x n of a (lda stride).
bool chol_unblocked(double* a, int n, int lda, double eps) {
  for (int j = 0; j < n; ++j) {
    double* aj = a + static_cast<std::size_t>(j) * lda;
    double d = aj[j];
    for (int k = 0; k < j; ++k) d -= aj[k] * aj[k];
    if (d <= eps) return false;
    d = std::sqrt(d);
    aj[j] = d;
    double inv = 1.0 / d;
    for (int i = j + 1; i < n; ++i) {
      double* ai = a + static_cast<std::size_t>(i) * lda;
      double s = ai[j];
      for (int k = 0; k < j; ++k) s -= ai[k] * aj[k];
      ai[j] = s * inv;
    }
  }
  return true;
}

constexpr int kCholBlock = 48;

}  // namespace

bool cholesky(Mat& A, double eps) {
  const int n = A.rows;
  const int lda = A.cols;
  double* a = A.a.data();
  for (int k = 0; k < n; k += kCholBlock) {
    int nb = std::min(kCholBlock, n - k);
    double* akk = a + static_cast<std::size_t>(k) * lda + k;
    if (!chol_unblocked(akk, nb, lda, eps)) return false;
    // Panel: solve L21 * L11^T = A21  ->  L21 = A21 * L11^-T
    for (int i = k + nb; i < n; ++i) {
      double* ai = a + static_cast<std::size_t>(i) * lda + k;
      for (int j = 0; j < nb; ++j) {
        const double* lj = akk + static_cast<std::size_t>(j) * lda;
        double s = ai[j];
        for (int p = 0; p < j; ++p) s -= ai[p] * lj[p];
        ai[j] = s / lj[j];
      }
    }
    // Trailing update: A22 -= L21 * L21^T (lower triangle only).
    for (int i = k + nb; i < n; ++i) {
      const double* li = a + static_cast<std::size_t>(i) * lda + k;
      double* arow = a + static_cast<std::size_t>(i) * lda;
      for (int j = k + nb; j <= i; ++j) {
        const double* lj = a + static_cast<std::size_t>(j) * lda + k;
        double s = 0.0;
        for (int p = 0; p < nb; ++p) s += li[p] * lj[p];
        arow[j] -= s;
      }
    }
  }
  return true;
}

void lower_solve_inplace(const Mat& L, std::span<double> b) {
  const int n = L.rows;
  for (int i = 0; i < n; ++i) {
    const double* li = L.row(i);
    double s = b[i];
    for (int j = 0; j < i; ++j) s -= li[j] * b[j];
    b[i] = s / li[i];
  }
}

void lower_t_solve_inplace(const Mat& L, std::span<double> b) {
  const int n = L.rows;
  for (int i = n - 1; i >= 0; --i) {
    double s = b[i];
    for (int j = i + 1; j < n; ++j) s -= L.at(j, i) * b[j];
    b[i] = s / L.at(i, i);
  }
}

void chol_solve_inplace(const Mat& L, std::span<double> b) {
  lower_solve_inplace(L, b);
  lower_t_solve_inplace(L, b);
}

void sym_eig(const Mat& A, Vec& eigenvalues, Mat& eigenvectors, int max_sweeps) {
  const int n = A.rows;
  Mat D = A;
  Mat V = Mat::identity(n);
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double off = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) off += D.at(i, j) * D.at(i, j);
    if (off <= 1e-30) break;
    for (int p = 0; p < n - 1; ++p) {
      for (int q = p + 1; q < n; ++q) {
        double apq = D.at(p, q);
        if (std::abs(apq) < 1e-300) continue;
        double app = D.at(p, p), aqq = D.at(q, q);
        double theta = 0.5 * (aqq - app) / apq;
        double t = (theta >= 0 ? 1.0 : -1.0) /
                   (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        double c = 1.0 / std::sqrt(t * t + 1.0);
        double s = t * c;
        for (int k = 0; k < n; ++k) {
          double dkp = D.at(k, p), dkq = D.at(k, q);
          D.at(k, p) = c * dkp - s * dkq;
          D.at(k, q) = s * dkp + c * dkq;
        }
        for (int k = 0; k < n; ++k) {
          double dpk = D.at(p, k), dqk = D.at(q, k);
          D.at(p, k) = c * dpk - s * dqk;
          D.at(q, k) = s * dpk + c * dqk;
        }
        for (int k = 0; k < n; ++k) {
          double vkp = V.at(k, p), vkq = V.at(k, q);
          V.at(k, p) = c * vkp - s * vkq;
          V.at(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }
  eigenvalues.assign(static_cast<std::size_t>(n), 0.0);
  for (int i = 0; i < n; ++i) eigenvalues[i] = D.at(i, i);
  // Sort ascending with matching vectors (stable index sort).
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return eigenvalues[a] < eigenvalues[b];
  });
  Vec w(static_cast<std::size_t>(n));
  Mat Vo(n, n);
  for (int c = 0; c < n; ++c) {
    w[c] = eigenvalues[order[c]];
    for (int r = 0; r < n; ++r) Vo.at(r, c) = V.at(r, order[c]);
  }
  eigenvalues = std::move(w);
  eigenvectors = std::move(Vo);
}

double sym_min_eig(const Mat& A) {
  Vec w;
  Mat V;
  sym_eig(A, w, V);
  return w.empty() ? 0.0 : w.front();
}

void sym_matvec(const Mat& A, std::span<const double> x, std::span<double> y) {
  for (int i = 0; i < A.rows; ++i) {
    const double* ai = A.row(i);
    double s = 0.0;
    for (int j = 0; j < A.cols; ++j) s += ai[j] * x[j];
    y[i] = s;
  }
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

}  // namespace nnsos
