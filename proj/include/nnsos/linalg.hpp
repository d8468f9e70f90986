#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace nnsos {

using Vec = std::vector<double>;

// Dense row-major matrix. Small and unclever on purpose: everything the SDP
// solver factorizes is dense anyway.
struct Mat {
  int rows = 0, cols = 0;
  Vec a;

  Mat() = default;
  Mat(int r, int c) : rows(r), cols(c), a(static_cast<std::size_t>(r) * c, 0.0) {}
  double& at(int i, int j) { return a[static_cast<std::size_t>(i) * cols + j]; }
  double at(int i, int j) const { return a[static_cast<std::size_t>(i) * cols + j]; }
  double* row(int i) { return a.data() + static_cast<std::size_t>(i) * cols; }
  const double* row(int i) const { return a.data() + static_cast<std::size_t>(i) * cols; }
  void zero() { std::fill(a.begin(), a.end(), 0.0); }
  static Mat identity(int n);
  Mat transposed() const;
};

Mat matmul(const Mat& A, const Mat& B);
// C = A * B^T
Mat matmul_nt(const Mat& A, const Mat& B);
// C = A^T * B
Mat matmul_tn(const Mat& A, const Mat& B);
Vec matvec(const Mat& A, std::span<const double> x);

// In-place lower Cholesky; returns false if a pivot drops below eps.
// Upper triangle is left untouched. Blocked for cache friendliness.
bool cholesky(Mat& A, double eps = 0.0);

// Solves L y = b and then L^T x = y given the factor from cholesky().
void chol_solve_inplace(const Mat& L, std::span<double> b);
// Forward substitution only: L y = b.
void lower_solve_inplace(const Mat& L, std::span<double> b);
// L^T x = y.
void lower_t_solve_inplace(const Mat& L, std::span<double> b);

// Cyclic Jacobi eigensolver for symmetric A: A = V diag(w) V^T with
// eigenvalues ascending. Deterministic (fixed sweep order).
void sym_eig(const Mat& A, Vec& eigenvalues, Mat& eigenvectors,
             int max_sweeps = 30);

double sym_min_eig(const Mat& A);

// y = A x for symmetric A stored full.
void sym_matvec(const Mat& A, std::span<const double> x, std::span<double> y);

double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);
void axpy(double alpha, std::span<const double> x, std::span<double> y);

}  // namespace nnsos
