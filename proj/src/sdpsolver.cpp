#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstdio>
#include <limits>

#include "nnsos/poly.hpp"  // Error
#include "nnsos/sdp.hpp"

// Primal-dual interior-point method on the homogeneous self-dual embedding,
// with Nesterov-Todd scaling for the PSD blocks and a Mehrotra
// predictor-corrector step. Free variables stay in the Newton system and are
// pinned through a second (small) Schur complement, so nothing is densified
// up front. Deterministic: fixed orderings, no randomness, no timers.
//
// Internal convention is MINIMIZE c.x ; the public problem maximizes, so
// c = -objective and signs are flipped on report.

namespace nnsos {

const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal: return "optimal";
    case SolveStatus::Feasible: return "feasible";
    case SolveStatus::PrimalInfeasible: return "primal_infeasible";
    case SolveStatus::DualInfeasible: return "dual_infeasible";
    case SolveStatus::Stalled: return "stalled";
  }
  return "?";
}

void SdpProblem::check_well_formed() const {
  auto check_term = [&](const SdpTerm& t) {
    if (t.block < 0 || t.block >= static_cast<int>(block_dims.size()))
      throw Error("SDP term references undeclared block");
    int d = block_dims[t.block];
    if (t.i < 0 || t.j < t.i || t.j >= d)
      throw Error("SDP term entry out of range");
  };
  auto check_lin = [&](const FreeTerm& t) {
    if (t.var < 0 || t.var >= num_free)
      throw Error("SDP row references undeclared free variable");
  };
  for (auto& r : rows) {
    for (auto& t : r.mat) check_term(t);
    for (auto& t : r.lin) check_lin(t);
  }
  for (auto& t : obj_mat) check_term(t);
  for (auto& t : obj_lin) check_lin(t);
  for (int d : block_dims)
    if (d <= 0) throw Error("SDP block dimension must be positive");
}

namespace {

constexpr double kSqrt2 = 1.4142135623730951;

struct SvecLayout {
  std::vector<int> dims;
  std::vector<int> offset;  // svec offset per block
  int total = 0;

  explicit SvecLayout(const std::vector<int>& d) : dims(d) {
    offset.resize(d.size());
    for (std::size_t k = 0; k < d.size(); ++k) {
      offset[k] = total;
      total += d[k] * (d[k] + 1) / 2;
    }
  }
  static int tri_index(int d, int i, int j) {  // i <= j, row-major upper
    return i * d - i * (i - 1) / 2 + (j - i);
  }
};

void svec_to_mat(const double* v, Mat& M) {
  int d = M.rows;
  int p = 0;
  for (int i = 0; i < d; ++i)
    for (int j = i; j < d; ++j, ++p) {
      double x = v[p];
      if (i == j) {
        M.at(i, i) = x;
      } else {
        M.at(i, j) = M.at(j, i) = x / kSqrt2;
      }
    }
}

void mat_to_svec(const Mat& M, double* v) {
  int d = M.rows;
  int p = 0;
  for (int i = 0; i < d; ++i)
    for (int j = i; j < d; ++j, ++p)
      v[p] = (i == j) ? M.at(i, i) : M.at(i, j) * kSqrt2;
}

// Sparse row in svec coordinates plus per-block matrix terms for the Schur
// assembly.
struct RowData {
  std::vector<std::pair<int, double>> svec_terms;  // (global svec idx, coef)
  std::vector<std::pair<int, double>> lin_terms;   // (free var, coef)
  double rhs = 0.0;
};

struct BlockRowTerms {
  int row = 0;
  std::vector<SdpTerm> terms;  // entries of this row living in one block
};

struct Workspace {
  const SdpProblem& prob;
  SvecLayout lay;
  int m, n, f, nu;

  std::vector<RowData> rows;
  std::vector<std::vector<BlockRowTerms>> block_rows;  // per block
  Vec c_svec;  // minimize convention
  Vec c_lin;
  Vec b;
  Vec row_scale;  // equilibration; original dual y_r = row_scale[r] * y_hat_r

  explicit Workspace(const SdpProblem& p)
      : prob(p), lay(p.block_dims), m(static_cast<int>(p.rows.size())),
        n(lay.total), f(p.num_free), nu(0) {
    for (int d : p.block_dims) nu += d;
    rows.resize(m);
    row_scale.assign(m, 1.0);
    block_rows.resize(p.block_dims.size());
    std::vector<std::vector<SdpTerm>> per_block(p.block_dims.size());
    for (int r = 0; r < m; ++r) {
      const SdpRow& src = p.rows[r];
      RowData& dst = rows[r];
      double amax = 0.0;
      for (auto& t : src.mat) amax = std::max(amax, std::abs(t.coef));
      for (auto& t : src.lin) amax = std::max(amax, std::abs(t.coef));
      double s = 1.0 / std::clamp(amax, 1e-6, 1e12);
      row_scale[r] = s;
      dst.rhs = src.rhs * s;
      for (auto& t : src.mat) {
        int d = lay.dims[t.block];
        int idx = lay.offset[t.block] + SvecLayout::tri_index(d, t.i, t.j);
        double cs = (t.i == t.j) ? t.coef : t.coef / kSqrt2;
        dst.svec_terms.emplace_back(idx, cs * s);
        SdpTerm scaled = t;
        scaled.coef *= s;
        per_block[t.block].push_back(scaled);
      }
      for (auto& t : src.lin) dst.lin_terms.emplace_back(t.var, t.coef * s);
      for (std::size_t k = 0; k < per_block.size(); ++k) {
        if (!per_block[k].empty()) {
          block_rows[k].push_back({r, std::move(per_block[k])});
          per_block[k].clear();
        }
      }
    }
    c_svec.assign(n, 0.0);
    c_lin.assign(std::max(f, 0), 0.0);
    b.assign(m, 0.0);
    for (int r = 0; r < m; ++r) b[r] = rows[r].rhs;
    for (auto& t : prob.obj_mat) {
      int d = lay.dims[t.block];
      int idx = lay.offset[t.block] + SvecLayout::tri_index(d, t.i, t.j);
      c_svec[idx] -= (t.i == t.j) ? t.coef : t.coef / kSqrt2;
    }
    for (auto& t : prob.obj_lin) c_lin[t.var] -= t.coef;
  }

  void A_mul(std::span<const double> x, std::span<const double> w,
             std::span<double> out) const {
    for (int r = 0; r < m; ++r) {
      double s = 0.0;
      for (auto& [idx, cf] : rows[r].svec_terms) s += cf * x[idx];
      for (auto& [v, cf] : rows[r].lin_terms) s += cf * w[v];
      out[r] = s;
    }
  }

  void AT_mul(std::span<const double> y, std::span<double> out) const {
    std::fill(out.begin(), out.end(), 0.0);
    for (int r = 0; r < m; ++r) {
      double yr = y[r];
      if (yr == 0.0) continue;
      for (auto& [idx, cf] : rows[r].svec_terms) out[idx] += cf * yr;
    }
  }

  void BT_mul(std::span<const double> y, std::span<double> out) const {
    std::fill(out.begin(), out.end(), 0.0);
    for (int r = 0; r < m; ++r) {
      double yr = y[r];
      if (yr == 0.0) continue;
      for (auto& [v, cf] : rows[r].lin_terms) out[v] += cf * yr;
    }
  }
};

// Per-block Nesterov-Todd scaling: R^T Z R = R^-1 X R^-T = diag(lambda).
struct NTScaling {
  std::vector<Mat> R, Rinv, W;
  std::vector<Vec> lambda;

  bool compute(const Workspace& ws, const Vec& x, const Vec& z) {
    std::size_t nb = ws.lay.dims.size();
    R.assign(nb, {});
    Rinv.assign(nb, {});
    W.assign(nb, {});
    lambda.assign(nb, {});
    for (std::size_t k = 0; k < nb; ++k) {
      int d = ws.lay.dims[k];
      Mat X(d, d), Z(d, d);
      svec_to_mat(x.data() + ws.lay.offset[k], X);
      svec_to_mat(z.data() + ws.lay.offset[k], Z);
      Mat Lx = X;
      if (!cholesky(Lx)) return false;
      Mat Lz = Z;
      if (!cholesky(Lz)) return false;
      // Zero strict upper triangles of the factors.
      for (int i = 0; i < d; ++i)
        for (int j = i + 1; j < d; ++j) Lx.at(i, j) = Lz.at(i, j) = 0.0;
      // G = Lx^T Z Lx; eig G = V diag(sigma^2) V^T.
      Mat G = matmul_tn(Lx, matmul(Z, Lx));
      for (int i = 0; i < d; ++i)
        for (int j = i + 1; j < d; ++j) {
          double avg = 0.5 * (G.at(i, j) + G.at(j, i));
          G.at(i, j) = G.at(j, i) = avg;
        }
      Vec ev;
      Mat V;
      sym_eig(G, ev, V);
      if (ev.front() <= 0.0) return false;
      Vec sig(d), sighalf(d);
      for (int i = 0; i < d; ++i) {
        sig[i] = std::sqrt(ev[i]);
        sighalf[i] = std::sqrt(sig[i]);
      }
      // R = Lx V Sigma^-1/2 ; Rinv = Sigma^1/2 V^T Lx^-1.
      Mat Rk = matmul(Lx, V);
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) Rk.at(i, j) /= sighalf[j];
      // Lx^-1 by forward substitution on identity.
      Mat Lxinv = Mat::identity(d);
      for (int col = 0; col < d; ++col) {
        for (int i = 0; i < d; ++i) {
          double s = Lxinv.at(i, col);
          for (int j = 0; j < i; ++j) s -= Lx.at(i, j) * Lxinv.at(j, col);
          Lxinv.at(i, col) = s / Lx.at(i, i);
        }
      }
      Mat Rinvk = matmul_tn(V, Lxinv);
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) Rinvk.at(i, j) *= sighalf[i];
      W[k] = matmul_nt(Rk, Rk);
      R[k] = std::move(Rk);
      Rinv[k] = std::move(Rinvk);
      lambda[k] = std::move(sig);
    }
    return true;
  }

  // out = svec( W mat(v) W ) per block.
  void apply_W2(const Workspace& ws, std::span<const double> v,
                std::span<double> out) const {
    for (std::size_t k = 0; k < W.size(); ++k) {
      int d = W[k].rows;
      Mat Mv(d, d);
      svec_to_mat(v.data() + ws.lay.offset[k], Mv);
      Mat T = matmul(W[k], matmul(Mv, W[k]));
      mat_to_svec(T, out.data() + ws.lay.offset[k]);
    }
  }
};

// Newton solver pieces shared by predictor and corrector.
struct KKT {
  const Workspace& ws;
  const NTScaling& nt;
  Mat M;        // A W2 A^T (factored in-place)
  Mat K;        // M^-1 B (m x f)
  Mat Sw;       // B^T M^-1 B (factored)
  bool have_f = false;

  explicit KKT(const Workspace& w, const NTScaling& s) : ws(w), nt(s) {}

  bool factor() {
    const int m = ws.m;
    M = Mat(m, m);
    // Assemble M = A W2 A^T block by block.
    for (std::size_t k = 0; k < ws.block_rows.size(); ++k) {
      const auto& rows_k = ws.block_rows[k];
      if (rows_k.empty()) continue;
      int d = ws.lay.dims[k];
      const Mat& Wk = nt.W[k];
      Mat Abar(d, d), V(d, d);
      for (std::size_t a = 0; a < rows_k.size(); ++a) {
        const auto& ra = rows_k[a];
        // V = W Abar W with Abar the symmetric coefficient matrix of row a.
        bool sparse = ra.terms.size() * 2 < static_cast<std::size_t>(d);
        if (sparse) {
          V.zero();
          for (auto& t : ra.terms) {
            double cij = (t.i == t.j) ? t.coef : 0.5 * t.coef;
            const double* wi = Wk.row(t.i);
            const double* wj = Wk.row(t.j);
            for (int r = 0; r < d; ++r) {
              double wir = wi[r] * cij, wjr = wj[r] * cij;
              double* vr = V.row(r);
              if (t.i == t.j) {
                for (int c = 0; c < d; ++c) vr[c] += wir * wj[c];
              } else {
                for (int c = 0; c < d; ++c)
                  vr[c] += wir * wj[c] + wjr * wi[c];
              }
            }
          }
        } else {
          Abar.zero();
          for (auto& t : ra.terms) {
            double cij = (t.i == t.j) ? t.coef : 0.5 * t.coef;
            Abar.at(t.i, t.j) = cij;
            if (t.i != t.j) Abar.at(t.j, t.i) = cij;
          }
          V = matmul(Wk, matmul(Abar, Wk));
        }
        // M[ra.row, rb.row] += <V, Abar_b> for b >= a.
        for (std::size_t bji = a; bji < rows_k.size(); ++bji) {
          const auto& rb = rows_k[bji];
          double s = 0.0;
          // <Abar_b, V> with V symmetric: off-diagonal halves recombine, so
          // the stored upper-triangle coef applies to V(i,j) directly.
          for (auto& t : rb.terms) s += t.coef * V.at(t.i, t.j);
          M.at(ra.row, rb.row) += s;
          if (rb.row != ra.row) M.at(rb.row, ra.row) += s;
        }
      }
    }
    // Factor with a small ridge escalation if needed.
    double trace = 0.0;
    for (int i = 0; i < m; ++i) trace += M.at(i, i);
    double base = std::max(trace / std::max(m, 1), 1e-12);
    Mat Mcopy = M;
    double ridge = 0.0;
    for (int attempt = 0; attempt < 4; ++attempt) {
      M = Mcopy;
      if (ridge > 0)
        for (int i = 0; i < m; ++i) M.at(i, i) += ridge;
      if (cholesky(M)) {
        if (!factor_free_part()) {
          ridge = (ridge == 0) ? base * 1e-13 : ridge * 1e3;
          continue;
        }
        return true;
      }
      ridge = (ridge == 0) ? base * 1e-13 : ridge * 1e3;
    }
    return false;
  }

  bool factor_free_part() {
    const int f = ws.f;
    have_f = f > 0;
    if (!have_f) return true;
    const int m = ws.m;
    // Dense B from row lin terms.
    Mat B(m, f);
    for (int r = 0; r < m; ++r)
      for (auto& [v, cf] : ws.rows[r].lin_terms) B.at(r, v) += cf;
    K = Mat(m, f);
    Vec col(static_cast<std::size_t>(m));
    for (int j = 0; j < f; ++j) {
      for (int r = 0; r < m; ++r) col[r] = B.at(r, j);
      chol_solve_inplace(M, col);
      for (int r = 0; r < m; ++r) K.at(r, j) = col[r];
    }
    Sw = matmul_tn(B, K);
    double tr = 0.0;
    for (int i = 0; i < f; ++i) tr += Sw.at(i, i);
    for (int i = 0; i < f; ++i) Sw.at(i, i) += std::max(tr, 1.0) * 1e-14;
    return cholesky(Sw);
  }

  // y -> A W2 A^T y via the operators, avoiding a second dense M copy.
  void apply_M(const Vec& y, Vec& out) const {
    Vec aty(ws.n);
    ws.AT_mul(y, aty);
    Vec waty(ws.n);
    nt.apply_W2(ws, aty, waty);
    out.assign(ws.m, 0.0);
    for (int r = 0; r < ws.m; ++r) {
      double s = 0.0;
      for (auto& [idx, cf] : ws.rows[r].svec_terms) s += cf * waty[idx];
      out[r] = s;
    }
  }

  void solve_saddle_once(const Vec& u, const Vec& v, Vec& dy, Vec& dw) const {
    dy = u;
    chol_solve_inplace(M, dy);  // M^-1 u
    if (!have_f) {
      dw.clear();
      return;
    }
    const int f = ws.f;
    dw.assign(f, 0.0);
    // rhs_w = B^T M^-1 u - v
    Vec bty(f, 0.0);
    ws.BT_mul(dy, bty);
    for (int j = 0; j < f; ++j) dw[j] = bty[j] - v[j];
    chol_solve_inplace(Sw, dw);
    // dy = M^-1 u - K dw
    for (int r = 0; r < ws.m; ++r) {
      double s = 0.0;
      const double* kr = K.row(r);
      for (int j = 0; j < f; ++j) s += kr[j] * dw[j];
      dy[r] -= s;
    }
  }

  // Solves [M B; B^T 0] (dy, dw) = (u, v) with operator-based iterative
  // refinement; the refinement also corrects any ridge added during
  // factorization.
  void solve_saddle(const Vec& u, const Vec& v, Vec& dy, Vec& dw) const {
    solve_saddle_once(u, v, dy, dw);
    for (int pass = 0; pass < 2; ++pass) {
      Vec r1;
      apply_M(dy, r1);
      if (have_f) {
        for (int r = 0; r < ws.m; ++r) {
          double s = 0.0;
          for (auto& [var, cf] : ws.rows[r].lin_terms) s += cf * dw[var];
          r1[r] += s;
        }
      }
      for (int r = 0; r < ws.m; ++r) r1[r] = u[r] - r1[r];
      Vec r2(std::max(ws.f, 0), 0.0);
      if (have_f) {
        ws.BT_mul(dy, r2);
        for (int j = 0; j < ws.f; ++j) r2[j] = v[j] - r2[j];
      }
      double rn = norm2(r1) + (have_f ? norm2(r2) : 0.0);
      double un = norm2(u) + (have_f ? norm2(v) : 0.0);
      if (rn <= 1e-14 * (1.0 + un)) break;
      Vec cy, cw;
      solve_saddle_once(r1, r2, cy, cw);
      axpy(1.0, cy, dy);
      if (have_f) axpy(1.0, cw, dw);
    }
  }
};

struct Iterate {
  Vec x, z;  // cone, svec
  Vec w, y;
  double tau = 1.0, kappa = 1.0;
};

struct Direction {
  Vec dx, dz, dw, dy;
  double dtau = 0.0, dkappa = 0.0;
};

// Max alpha in [0, cap] keeping Lambda + alpha*Dscaled psd, per block.
double step_to_boundary(const Workspace& ws, const NTScaling& nt,
                        const Vec& dvec, bool is_x, double cap) {
  double alpha = cap;
  for (std::size_t k = 0; k < ws.lay.dims.size(); ++k) {
    int d = ws.lay.dims[k];
    Mat D(d, d);
    svec_to_mat(dvec.data() + ws.lay.offset[k], D);
    // Scaled direction: Rinv D Rinv^T for x, R^T D R for z.
    Mat S = is_x ? matmul(nt.Rinv[k], matmul_nt(D, nt.Rinv[k]))
                 : matmul_tn(nt.R[k], matmul(D, nt.R[k]));
    // Symmetrize and normalize by lambda: T = Lam^-1/2 S Lam^-1/2.
    const Vec& lam = nt.lambda[k];
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) {
        double v = 0.5 * (S.at(i, j) + S.at(j, i));
        S.at(i, j) = v;
      }
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j)
        S.at(i, j) /= std::sqrt(lam[i] * lam[j]);
    double emin = sym_min_eig(S);
    if (emin < 0) alpha = std::min(alpha, -1.0 / emin);
  }
  return alpha;
}

struct StepState {
  // Scaled affine directions, kept for the corrector.
  std::vector<Mat> dxs, dzs;
};

class HSDSolver {
 public:
  HSDSolver(const SdpProblem& prob, const SolverOptions& opts)
      : ws_(prob), opts_(opts) {}

  ConicSolution run() {
    init();
    ConicSolution sol;
    for (int iter = 0; iter < opts_.max_iter; ++iter) {
      if (check_convergence(sol, iter)) return sol;

      NTScaling nt;
      if (!nt.compute(ws_, it_.x, it_.z))
        return finish_stalled(sol, iter, "NT scaling breakdown");
      KKT kkt(ws_, nt);
      if (!kkt.factor())
        return finish_stalled(sol, iter, "KKT factorization failed");

      // tau-column solve, reused by both passes.
      Vec wc(ws_.n), h(ws_.m), dy2, dw2;
      nt.apply_W2(ws_, ws_.c_svec, wc);
      ws_.A_mul(wc, Vec(ws_.f, 0.0), h);
      for (int r = 0; r < ws_.m; ++r) h[r] += ws_.b[r];
      kkt.solve_saddle(h, ws_.c_lin, dy2, dw2);
      Vec dx2(ws_.n), dz2(ws_.n), aty2(ws_.n);
      ws_.AT_mul(dy2, aty2);
      Vec waty2(ws_.n);
      nt.apply_W2(ws_, aty2, waty2);
      for (int i = 0; i < ws_.n; ++i) {
        dx2[i] = waty2[i] - wc[i];
        dz2[i] = -aty2[i] + ws_.c_svec[i];
      }

      // Residuals.
      Vec rp = residual_p();
      Vec rw = residual_w();
      Vec rd = residual_d();
      double rg = residual_g();
      double mu_now = mu();

      // Predictor (affine): T = -Lambda^2, eta = 1.
      Direction aff;
      StepState ss;
      Vec rc_aff(ws_.n);
      for (int i = 0; i < ws_.n; ++i) rc_aff[i] = -it_.x[i];
      if (!newton(nt, kkt, dy2, dw2, dx2, dz2, rp, rw, rd, rg, 1.0, rc_aff,
                  -it_.tau * it_.kappa, aff))
        return finish_stalled(sol, iter, "singular Newton system");
      double amax = step_max(nt, aff);
      double a_aff = std::min(1.0, amax);
      double mu_aff = mu_after(aff, a_aff);
      double sigma = std::pow(std::clamp(mu_aff / mu_now, 0.0, 1.0), 3);

      // Corrector with Mehrotra second-order term.
      Vec rc(ws_.n);
      corrector_rhs(nt, aff, sigma * mu_now, rc);
      double ttau = sigma * mu_now - it_.tau * it_.kappa - aff.dtau * aff.dkappa;
      Direction dir;
      if (!newton(nt, kkt, dy2, dw2, dx2, dz2, rp, rw, rd, rg, 1.0 - sigma, rc,
                  ttau, dir))
        return finish_stalled(sol, iter, "singular Newton system");
      double amax2 = step_max(nt, dir);
      double alpha = std::min(1.0, opts_.step_fraction * amax2);
      if (alpha < 1e-10)
        return finish_stalled(sol, iter, "step length collapsed");

      axpy(alpha, dir.dx, it_.x);
      axpy(alpha, dir.dz, it_.z);
      axpy(alpha, dir.dy, it_.y);
      if (ws_.f > 0) axpy(alpha, dir.dw, it_.w);
      it_.tau += alpha * dir.dtau;
      it_.kappa += alpha * dir.dkappa;
      iters_ = iter + 1;

      if (opts_.verbose) {
        std::printf("it %3d  mu %.3e  tau %.3e  kappa %.3e  sigma %.2f  a %.3f\n",
                    iter, mu(), it_.tau, it_.kappa, sigma, alpha);
      }
#ifndef NDEBUG
      // Weak duality along the path (maximize convention): the primal value
      // exceeds the dual bound by at most kappa/tau plus the gap residual.
      {
        double pmin = (dot(ws_.c_svec, it_.x) +
                       (ws_.f ? dot(ws_.c_lin, it_.w) : 0.0)) / it_.tau;
        double dmin = dot(ws_.b, it_.y) / it_.tau;
        double slack_g = it_.kappa / it_.tau +
                         std::abs(residual_g()) / it_.tau +
                         1e-9 * (1.0 + std::abs(pmin));
        assert(pmin - dmin >= -slack_g);
      }
#endif
    }
    check_convergence(sol, opts_.max_iter, /*final=*/true);
    if (sol.status == SolveStatus::Stalled) {
      extract(sol);
      sol.iterations = iters_;
      sol.message = "iteration limit reached";
    }
    return sol;
  }

 private:
  Workspace ws_;
  SolverOptions opts_;
  Iterate it_;
  int iters_ = 0;

  void init() {
    it_.x.assign(ws_.n, 0.0);
    it_.z.assign(ws_.n, 0.0);
    for (std::size_t k = 0; k < ws_.lay.dims.size(); ++k) {
      int d = ws_.lay.dims[k];
      int off = ws_.lay.offset[k];
      for (int i = 0; i < d; ++i)
        it_.x[off + SvecLayout::tri_index(d, i, i)] = 1.0,
        it_.z[off + SvecLayout::tri_index(d, i, i)] = 1.0;
    }
    it_.w.assign(ws_.f, 0.0);
    it_.y.assign(ws_.m, 0.0);
    it_.tau = it_.kappa = 1.0;
  }

  double mu() const {
    return (dot(it_.x, it_.z) + it_.tau * it_.kappa) / (ws_.nu + 1);
  }

  Vec residual_p() const {  // b tau - A x - B w
    Vec r(ws_.m);
    ws_.A_mul(it_.x, it_.w, r);
    for (int i = 0; i < ws_.m; ++i) r[i] = ws_.b[i] * it_.tau - r[i];
    return r;
  }
  Vec residual_w() const {  // c_w tau - B^T y
    Vec r(std::max(ws_.f, 0), 0.0);
    if (ws_.f == 0) return r;
    ws_.BT_mul(it_.y, r);
    for (int i = 0; i < ws_.f; ++i) r[i] = ws_.c_lin[i] * it_.tau - r[i];
    return r;
  }
  Vec residual_d() const {  // c_s tau - A^T y - z
    Vec r(ws_.n);
    ws_.AT_mul(it_.y, r);
    for (int i = 0; i < ws_.n; ++i)
      r[i] = ws_.c_svec[i] * it_.tau - r[i] - it_.z[i];
    return r;
  }
  double residual_g() const {  // kappa - b.y + c.x + c_w.w
    return it_.kappa - dot(ws_.b, it_.y) + dot(ws_.c_svec, it_.x) +
           (ws_.f > 0 ? dot(ws_.c_lin, it_.w) : 0.0);
  }

  // One Newton solve for given eta / complementarity targets.
  bool newton(const NTScaling& nt, const KKT& kkt, const Vec& dy2,
              const Vec& dw2, const Vec& dx2, const Vec& dz2, const Vec& rp,
              const Vec& rw, const Vec& rd, double rg, double eta,
              const Vec& rhs_c, double t_tau, Direction& out) {
    // RHS for the (dy1, dw1) saddle solve:
    //   u = eta rp - A rhs_c + eta A W2 rd ; v = eta rw
    Vec wrd(ws_.n);
    nt.apply_W2(ws_, rd, wrd);
    Vec tmp(ws_.n);
    for (int i = 0; i < ws_.n; ++i) tmp[i] = -rhs_c[i] + eta * wrd[i];
    Vec u(ws_.m);
    ws_.A_mul(tmp, Vec(ws_.f, 0.0), u);
    for (int r = 0; r < ws_.m; ++r) u[r] += eta * rp[r];
    Vec v(std::max(ws_.f, 0), 0.0);
    for (int i = 0; i < ws_.f; ++i) v[i] = eta * rw[i];
    Vec dy1, dw1;
    kkt.solve_saddle(u, v, dy1, dw1);

    Vec aty1(ws_.n);
    ws_.AT_mul(dy1, aty1);
    Vec waty1(ws_.n);
    nt.apply_W2(ws_, aty1, waty1);
    Vec dx1(ws_.n), dz1(ws_.n);
    for (int i = 0; i < ws_.n; ++i) {
      dx1[i] = rhs_c[i] + waty1[i] - eta * wrd[i];
      dz1[i] = -aty1[i] + eta * rd[i];
    }

    double num = -eta * rg - dot(ws_.c_svec, dx1) + dot(ws_.b, dy1) -
                 t_tau / it_.tau;
    if (ws_.f > 0) num -= dot(ws_.c_lin, dw1);
    double den = dot(ws_.c_svec, dx2) - dot(ws_.b, dy2) - it_.kappa / it_.tau;
    if (ws_.f > 0) den += dot(ws_.c_lin, dw2);
    if (std::abs(den) < 1e-300) return false;
    double dtau = num / den;

    out.dy = dy1;
    axpy(dtau, dy2, out.dy);
    out.dx = dx1;
    axpy(dtau, dx2, out.dx);
    out.dz = dz1;
    axpy(dtau, dz2, out.dz);
    out.dw = dw1;
    if (ws_.f > 0) axpy(dtau, dw2, out.dw);
    out.dtau = dtau;
    out.dkappa = (t_tau - it_.kappa * dtau) / it_.tau;
    return true;
  }

  double step_max(const NTScaling& nt, const Direction& d) const {
    double a = 1e10;
    a = step_to_boundary(ws_, nt, d.dx, true, a);
    a = step_to_boundary(ws_, nt, d.dz, false, a);
    if (d.dtau < 0) a = std::min(a, -it_.tau / d.dtau);
    if (d.dkappa < 0) a = std::min(a, -it_.kappa / d.dkappa);
    return a;
  }

  double mu_after(const Direction& d, double a) const {
    Vec xa = it_.x, za = it_.z;
    axpy(a, d.dx, xa);
    axpy(a, d.dz, za);
    double t = it_.tau + a * d.dtau, k = it_.kappa + a * d.dkappa;
    return (dot(xa, za) + t * k) / (ws_.nu + 1);
  }

  // T = sigma*mu*I - Lambda^2 - sym(dXs dZs); rhs_c = svec(R L(T) R^T).
  void corrector_rhs(const NTScaling& nt, const Direction& aff, double smu,
                     Vec& rc) const {
    for (std::size_t k = 0; k < ws_.lay.dims.size(); ++k) {
      int d = ws_.lay.dims[k];
      Mat DX(d, d), DZ(d, d);
      svec_to_mat(aff.dx.data() + ws_.lay.offset[k], DX);
      svec_to_mat(aff.dz.data() + ws_.lay.offset[k], DZ);
      Mat dxs = matmul(nt.Rinv[k], matmul_nt(DX, nt.Rinv[k]));
      Mat dzs = matmul_tn(nt.R[k], matmul(DZ, nt.R[k]));
      Mat P = matmul(dxs, dzs);
      const Vec& lam = nt.lambda[k];
      Mat T(d, d);
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) {
          double sym = 0.5 * (P.at(i, j) + P.at(j, i));
          double t = -sym;
          if (i == j) t += smu - lam[i] * lam[i];
          T.at(i, j) = t;
        }
      // Solve Lambda o L = T : L_ij = 2 T_ij / (lam_i + lam_j).
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j)
          T.at(i, j) = 2.0 * T.at(i, j) / (lam[i] + lam[j]);
      Mat out = matmul(nt.R[k], matmul_nt(T, nt.R[k]));
      // Symmetrize against roundoff.
      for (int i = 0; i < d; ++i)
        for (int j = i + 1; j < d; ++j) {
          double avg = 0.5 * (out.at(i, j) + out.at(j, i));
          out.at(i, j) = out.at(j, i) = avg;
        }
      mat_to_svec(out, rc.data() + ws_.lay.offset[k]);
    }
  }

  void extract(ConicSolution& sol) const {
    double t = it_.tau > 0 ? it_.tau : 1.0;
    sol.blocks.clear();
    sol.dual_blocks.clear();
    for (std::size_t k = 0; k < ws_.lay.dims.size(); ++k) {
      int d = ws_.lay.dims[k];
      Mat X(d, d), Z(d, d);
      svec_to_mat(it_.x.data() + ws_.lay.offset[k], X);
      svec_to_mat(it_.z.data() + ws_.lay.offset[k], Z);
      for (auto& v : X.a) v /= t;
      for (auto& v : Z.a) v /= t;
      sol.blocks.push_back(std::move(X));
      sol.dual_blocks.push_back(std::move(Z));
    }
    sol.free_vars = it_.w;
    for (auto& v : sol.free_vars) v /= t;
    sol.y = it_.y;
    for (int r = 0; r < ws_.m; ++r) sol.y[r] *= ws_.row_scale[r] / t;
    sol.primal_obj = -(dot(ws_.c_svec, it_.x) +
                       (ws_.f ? dot(ws_.c_lin, it_.w) : 0.0)) / t;
    sol.dual_obj = -dot(ws_.b, it_.y) / t;
  }

  ConicSolution finish_stalled(ConicSolution& sol, int iter,
                               const char* why) {
    // A failed factorization late in the solve often just means the iterate
    // is already at the answer; give the convergence tests one more look with
    // relaxed tolerances before declaring a stall.
    if (check_convergence(sol, iter, /*final=*/true)) return sol;
    extract(sol);
    sol.status = SolveStatus::Stalled;
    sol.iterations = iter;
    sol.message = why;
    return sol;
  }

  bool check_convergence(ConicSolution& sol, int iter, bool final = false) {
    double slack = final ? 100.0 : 1.0;
    double bnorm = 1.0 + norm2(ws_.b);
    double cnorm = 1.0 + norm2(ws_.c_svec) +
                   (ws_.f ? norm2(ws_.c_lin) : 0.0);
    Vec rp = residual_p();
    Vec rw = residual_w();
    Vec rd = residual_d();
    double tau = it_.tau;

    double pres = norm2(rp) / (tau * bnorm);
    double dres = (norm2(rd) + (ws_.f ? norm2(rw) : 0.0)) / (tau * cnorm);
    double pobj = (dot(ws_.c_svec, it_.x) +
                   (ws_.f ? dot(ws_.c_lin, it_.w) : 0.0)) / tau;
    double dobj = dot(ws_.b, it_.y) / tau;
    double gap = dot(it_.x, it_.z) / (tau * tau);
    double relgap = std::abs(pobj - dobj) / (1.0 + std::max(std::abs(pobj), std::abs(dobj)));

    if (pres <= opts_.feas_tol * slack && dres <= opts_.feas_tol * slack &&
        (relgap <= opts_.gap_tol * slack ||
         gap <= opts_.gap_tol * slack * (1.0 + std::abs(pobj)))) {
      extract(sol);
      sol.status = ws_.prob.has_objective() ? SolveStatus::Optimal
                                            : SolveStatus::Feasible;
      sol.iterations = iter;
      sol.res_primal = pres;
      sol.res_dual = dres;
      sol.res_gap = relgap;
      return true;
    }

    // Infeasibility certificates (tau-independent ray tests).
    double bty = dot(ws_.b, it_.y);
    if (bty > 0) {
      Vec aty(ws_.n);
      ws_.AT_mul(it_.y, aty);
      // need mat(-A^T y) >= 0, i.e. A^T y + z_ray = 0 with z_ray = -A^T y in K
      double worst = 0.0;
      for (std::size_t k = 0; k < ws_.lay.dims.size(); ++k) {
        int d = ws_.lay.dims[k];
        Mat Mk(d, d);
        svec_to_mat(aty.data() + ws_.lay.offset[k], Mk);
        for (auto& v : Mk.a) v = -v;
        worst = std::min(worst, sym_min_eig(Mk));
      }
      Vec btyv(std::max(ws_.f, 0), 0.0);
      if (ws_.f) ws_.BT_mul(it_.y, btyv);
      double lin_res = ws_.f ? norm2(btyv) : 0.0;
      double qual = (std::max(0.0, -worst) + lin_res) / bty;
      if (qual <= opts_.feas_tol * slack * 10) {
        extract(sol);
        sol.status = SolveStatus::PrimalInfeasible;
        sol.iterations = iter;
        sol.ray_y = it_.y;
        for (int r = 0; r < ws_.m; ++r)
          sol.ray_y[r] *= ws_.row_scale[r] / bty;
        sol.ray_residual = qual;
        sol.message = "Farkas ray certifies primal infeasibility";
        return true;
      }
    }
    double cx = dot(ws_.c_svec, it_.x) + (ws_.f ? dot(ws_.c_lin, it_.w) : 0.0);
    if (cx < 0) {
      Vec ax(ws_.m);
      ws_.A_mul(it_.x, it_.w, ax);
      if (norm2(ax) / (-cx) <= opts_.feas_tol * slack * 10) {
        extract(sol);
        sol.status = SolveStatus::DualInfeasible;
        sol.iterations = iter;
        sol.message = "improving ray certifies dual infeasibility";
        return true;
      }
    }
    return false;
  }
};

}  // namespace

ConicSolution solve_sdp(const SdpProblem& prob, const SolverOptions& opts) {
  prob.check_well_formed();
  if (prob.rows.empty()) throw Error("SDP problem has no rows");
  // Structurally empty rows are decided up front; "0 = rhs" with rhs != 0 is
  // a one-line Farkas certificate.
  for (std::size_t r = 0; r < prob.rows.size(); ++r) {
    const SdpRow& row = prob.rows[r];
    if (row.mat.empty() && row.lin.empty() && row.rhs != 0.0) {
      ConicSolution sol;
      sol.status = SolveStatus::PrimalInfeasible;
      sol.ray_y.assign(prob.rows.size(), 0.0);
      sol.ray_y[r] = 1.0 / row.rhs;
      sol.ray_residual = 0.0;
      sol.message = "contradictory empty equality row";
      return sol;
    }
  }
  HSDSolver solver(prob, opts);
  return solver.run();
}

ValidationReport validate_solution(const SdpProblem& prob,
                                   const ConicSolution& sol,
                                   double feas_tol) {
  ValidationReport rep;
  if (sol.status == SolveStatus::PrimalInfeasible) {
    // Check the Farkas ray instead of a primal point.
    rep.status_consistent = !sol.ray_y.empty() && sol.ray_residual <= feas_tol;
    rep.detail = "infeasibility certificate residual " +
                 std::to_string(sol.ray_residual);
    return rep;
  }
  if (sol.blocks.size() != prob.block_dims.size()) {
    rep.detail = "solution block count mismatch";
    return rep;
  }
  double worst = 0.0;
  for (auto& row : prob.rows) {
    double v = -row.rhs;
    for (auto& t : row.mat) v += t.coef * sol.blocks[t.block].at(t.i, t.j);
    for (auto& t : row.lin) v += t.coef * sol.free_vars[t.var];
    worst = std::max(worst, std::abs(v));
  }
  rep.max_row_violation = worst;
  rep.min_block_eig = std::numeric_limits<double>::infinity();
  rep.min_dual_eig = std::numeric_limits<double>::infinity();
  for (auto& B : sol.blocks)
    rep.min_block_eig = std::min(rep.min_block_eig, sym_min_eig(B));
  for (auto& B : sol.dual_blocks)
    rep.min_dual_eig = std::min(rep.min_dual_eig, sym_min_eig(B));
  if (sol.dual_blocks.empty()) rep.min_dual_eig = 0.0;
  double pobj = 0.0;
  for (auto& t : prob.obj_mat) pobj += t.coef * sol.blocks[t.block].at(t.i, t.j);
  for (auto& t : prob.obj_lin) pobj += t.coef * sol.free_vars[t.var];
  rep.duality_gap = std::abs(pobj - sol.dual_obj);
  bool feasible_numbers = worst <= feas_tol && rep.min_block_eig >= -feas_tol;
  bool claimed_ok = sol.status == SolveStatus::Optimal ||
                    sol.status == SolveStatus::Feasible;
  rep.status_consistent = claimed_ok == feasible_numbers;
  return rep;
}

}  // namespace nnsos
