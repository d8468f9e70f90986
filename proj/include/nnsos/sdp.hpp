#pragma once

#include <string>
#include <vector>

#include "nnsos/linalg.hpp"

namespace nnsos {

// One coefficient on a symmetric block entry. `coef` multiplies the matrix
// entry Q(i,j) with i <= j; callers that mean "both triangles" fold the
// factor 2 into coef themselves.
struct SdpTerm {
  int block = 0;
  int i = 0, j = 0;
  double coef = 0.0;
};

struct FreeTerm {
  int var = 0;
  double coef = 0.0;
};

struct SdpRow {
  std::vector<SdpTerm> mat;
  std::vector<FreeTerm> lin;
  double rhs = 0.0;
};

// Equality standard form over PSD blocks Q_k >= 0 and free scalars w:
//   maximize   sum <obj_mat, Q> + obj_lin . w
//   subject to per-row: sum coef*Q(i,j) + sum coef*w = rhs
struct SdpProblem {
  std::vector<int> block_dims;
  int num_free = 0;
  std::vector<SdpRow> rows;
  std::vector<SdpTerm> obj_mat;
  std::vector<FreeTerm> obj_lin;

  bool has_objective() const { return !obj_mat.empty() || !obj_lin.empty(); }
  void check_well_formed() const;  // throws Error on bad indices
};

enum class SolveStatus {
  Optimal,
  Feasible,  // converged on a problem with no objective
  PrimalInfeasible,
  DualInfeasible,
  Stalled,
};

const char* to_string(SolveStatus s);

struct SolverOptions {
  double feas_tol = 1e-8;
  double gap_tol = 1e-8;
  int max_iter = 200;
  double step_fraction = 0.99;
  bool verbose = false;
};

struct ConicSolution {
  SolveStatus status = SolveStatus::Stalled;
  int iterations = 0;

  std::vector<Mat> blocks;       // primal Q_k (full symmetric storage)
  Vec free_vars;                 // w
  Vec y;                         // dual multiplier per row
  std::vector<Mat> dual_blocks;  // dual slack Z_k

  // Maximize convention.
  double primal_obj = 0.0;
  double dual_obj = 0.0;
  double res_primal = 0.0;
  double res_dual = 0.0;
  double res_gap = 0.0;

  // Farkas ray when status == PrimalInfeasible (normalized so b.ray_y = 1):
  // mat(A^T ray_y) <= 0 and B^T ray_y = 0 within ray_residual.
  Vec ray_y;
  double ray_residual = 0.0;

  std::string message;
};

ConicSolution solve_sdp(const SdpProblem& prob, const SolverOptions& opts = {});

struct ValidationReport {
  double max_row_violation = 0.0;    // |row(Q,w) - rhs| worst case
  double min_block_eig = 0.0;        // over primal blocks
  double min_dual_eig = 0.0;         // over dual slack blocks
  double duality_gap = 0.0;          // |primal - dual| recomputed
  bool status_consistent = false;    // claimed status vs recomputed numbers
  std::string detail;
};

// Independently recomputes residuals and eigenvalue floors for a claimed
// solution; does not touch the solver.
ValidationReport validate_solution(const SdpProblem& prob,
                                   const ConicSolution& sol,
                                   double feas_tol = 1e-6);

}  // namespace nnsos
