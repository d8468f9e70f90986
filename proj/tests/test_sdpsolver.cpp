#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "nnsos/sdp.hpp"

using namespace nnsos;

// Analytic corpus. Each problem's optimum is derived by hand from an
// eigenvalue or determinant argument noted next to it; the solver must land
// within 1e-6.

namespace {

SdpProblem corpus_bound_offdiag() {
  // maximize -x s.t. [[x,1],[1,x]] >= 0.
  // PSD iff both eigenvalues x-1, x+1 >= 0, i.e. x >= 1 -> optimum -1.
  SdpProblem p;
  p.block_dims = {2};
  p.rows.push_back({{{0, 0, 1, 1.0}}, {}, 1.0});          // Q01 = 1
  p.rows.push_back({{{0, 0, 0, 1.0}, {0, 1, 1, -1.0}}, {}, 0.0});  // Q00 = Q11
  p.obj_mat = {{0, 0, 0, -1.0}};
  return p;
}

SdpProblem corpus_fixed_scalar() {
  // Feasibility: 1x1 block pinned to 1. Feasible by inspection.
  SdpProblem p;
  p.block_dims = {1};
  p.rows.push_back({{{0, 0, 0, 1.0}}, {}, 1.0});
  return p;
}

SdpProblem corpus_gamma_cap() {
  // maximize g s.t. Q11 + g = 2, Q 1x1 psd. Q11 = 2-g >= 0 -> g* = 2.
  SdpProblem p;
  p.block_dims = {1};
  p.num_free = 1;
  p.rows.push_back({{{0, 0, 0, 1.0}}, {{0, 1.0}}, 2.0});
  p.obj_lin = {{0, 1.0}};
  return p;
}

SdpProblem corpus_lambda_max() {
  // maximize -t s.t. t*I - diag(1,3) >= 0: t* = lambda_max = 3, obj -3.
  SdpProblem p;
  p.block_dims = {2};
  p.num_free = 1;
  p.rows.push_back({{{0, 0, 0, 1.0}}, {{0, -1.0}}, -1.0});  // S00 - t = -1
  p.rows.push_back({{{0, 1, 1, 1.0}}, {{0, -1.0}}, -3.0});  // S11 - t = -3
  p.rows.push_back({{{0, 0, 1, 1.0}}, {}, 0.0});            // S01 = 0
  p.obj_lin = {{0, -1.0}};
  return p;
}

SdpProblem corpus_two_blocks() {
  // maximize w s.t. [1-w] >= 0 and [[1,w],[w,1]] >= 0.
  // First block caps w <= 1; second allows |w| <= 1 -> w* = 1.
  SdpProblem p;
  p.block_dims = {1, 2};
  p.num_free = 1;
  p.rows.push_back({{{0, 0, 0, 1.0}}, {{0, 1.0}}, 1.0});   // q + w = 1
  p.rows.push_back({{{1, 0, 0, 1.0}}, {}, 1.0});           // Q00 = 1
  p.rows.push_back({{{1, 1, 1, 1.0}}, {}, 1.0});           // Q11 = 1
  p.rows.push_back({{{1, 0, 1, 1.0}}, {{0, -1.0}}, 0.0});  // Q01 = w
  p.obj_lin = {{0, 1.0}};
  return p;
}

}  // namespace

TEST_CASE("analytic corpus solves to 1e-6") {
  struct Case {
    SdpProblem prob;
    double expected;
    const char* name;
  };
  Case cases[] = {
      {corpus_bound_offdiag(), -1.0, "bound_offdiag"},
      {corpus_gamma_cap(), 2.0, "gamma_cap"},
      {corpus_lambda_max(), -3.0, "lambda_max"},
      {corpus_two_blocks(), 1.0, "two_blocks"},
  };
  for (auto& c : cases) {
    CAPTURE(c.name);
    ConicSolution sol = solve_sdp(c.prob);
    CHECK(sol.status == SolveStatus::Optimal);
    CHECK(std::abs(sol.primal_obj - c.expected) <= 1e-6);
    CHECK(std::abs(sol.dual_obj - c.expected) <= 1e-6);
    ValidationReport rep = validate_solution(c.prob, sol);
    CHECK(rep.status_consistent);
    CHECK(rep.max_row_violation <= 1e-6);
    CHECK(rep.min_block_eig >= -1e-8);
  }
}

TEST_CASE("fixed scalar feasibility") {
  ConicSolution sol = solve_sdp(corpus_fixed_scalar());
  CHECK(sol.status == SolveStatus::Feasible);
  CHECK(sol.blocks[0].at(0, 0) == doctest::Approx(1.0));
}

TEST_CASE("contradictory empty equality is primal infeasible") {
  SdpProblem p;
  p.block_dims = {1};
  p.rows.push_back({{{0, 0, 0, 1.0}}, {}, 1.0});
  p.rows.push_back({{}, {}, 1.0});  // 0 = 1
  ConicSolution sol = solve_sdp(p);
  CHECK(sol.status == SolveStatus::PrimalInfeasible);
  CHECK(!sol.ray_y.empty());
}

TEST_CASE("negative scalar pin is primal infeasible with a Farkas ray") {
  // Q 1x1 psd with Q00 = -1: infeasible; ray y = -1 gives b.y = 1 > 0 and
  // -A^T y = -1 * -1... sign worked out by the solver.
  SdpProblem p;
  p.block_dims = {1};
  p.rows.push_back({{{0, 0, 0, 1.0}}, {}, -1.0});
  ConicSolution sol = solve_sdp(p);
  CHECK(sol.status == SolveStatus::PrimalInfeasible);
  REQUIRE(!sol.ray_y.empty());
  CHECK(sol.ray_residual <= 1e-6);
  ValidationReport rep = validate_solution(p, sol);
  CHECK(rep.status_consistent);
}

TEST_CASE("unbounded objective is dual infeasible") {
  // maximize Q00 with only Q11 pinned: Q00 can grow without bound.
  SdpProblem p;
  p.block_dims = {2};
  p.rows.push_back({{{0, 1, 1, 1.0}}, {}, 1.0});
  p.obj_mat = {{0, 0, 0, 1.0}};
  ConicSolution sol = solve_sdp(p);
  CHECK(sol.status == SolveStatus::DualInfeasible);
}

TEST_CASE("validate flags an injected fault") {
  SdpProblem p = corpus_bound_offdiag();
  ConicSolution sol = solve_sdp(p);
  REQUIRE(sol.status == SolveStatus::Optimal);
  ConicSolution bad = sol;
  bad.blocks[0].at(0, 0) += 0.1;
  ValidationReport rep = validate_solution(p, bad);
  CHECK(rep.max_row_violation >= 0.05);
  CHECK(!rep.status_consistent);
}

TEST_CASE("determinism: identical runs produce identical iterates") {
  SdpProblem p = corpus_lambda_max();
  ConicSolution a = solve_sdp(p);
  ConicSolution b = solve_sdp(p);
  CHECK(a.iterations == b.iterations);
  REQUIRE(a.blocks.size() == b.blocks.size());
  for (std::size_t k = 0; k < a.blocks.size(); ++k)
    for (std::size_t i = 0; i < a.blocks[k].a.size(); ++i)
      CHECK(a.blocks[k].a[i] == b.blocks[k].a[i]);  // bitwise
  for (std::size_t i = 0; i < a.free_vars.size(); ++i)
    CHECK(a.free_vars[i] == b.free_vars[i]);
}

TEST_CASE("moderate random feasibility problem") {
  // Constraints sampled from a known interior point, so the problem is
  // feasible by construction.
  SdpProblem p;
  p.block_dims = {5};
  Mat X0(5, 5);
  for (int i = 0; i < 5; ++i) X0.at(i, i) = 1.0 + 0.1 * i;
  X0.at(0, 1) = X0.at(1, 0) = 0.3;
  X0.at(2, 3) = X0.at(3, 2) = -0.2;
  unsigned state = 12345;
  auto next = [&]() {
    state = state * 1103515245u + 12345u;
    return static_cast<double>((state >> 16) & 0x7fff) / 16384.0 - 1.0;
  };
  for (int r = 0; r < 8; ++r) {
    SdpRow row;
    double rhs = 0.0;
    for (int i = 0; i < 5; ++i)
      for (int j = i; j < 5; ++j) {
        double c = next();
        if (std::abs(c) < 0.5) continue;
        row.mat.push_back({0, i, j, c});
        rhs += c * X0.at(i, j);
      }
    row.rhs = rhs;
    p.rows.push_back(row);
  }
  ConicSolution sol = solve_sdp(p);
  REQUIRE(sol.status == SolveStatus::Feasible);
  ValidationReport rep = validate_solution(p, sol);
  CHECK(rep.max_row_violation <= 1e-6);
  CHECK(rep.min_block_eig >= -1e-8);
}
