#pragma once

#include <cmath>
#include <map>
#include <optional>
#include <string>

#include "nnsos/abstraction.hpp"
#include "nnsos/problem.hpp"
#include "nnsos/simulator.hpp"
#include "nnsos/sosprog.hpp"

namespace nnsos {

struct GramData {
  std::vector<std::string> basis;  // monomial texts in the problem grammar
  Mat q;
};

struct MultiplierData {
  std::string name;   // s_1, t_1, p_1, ...
  std::string cls;    // "ineq" | "eq" | "region" | "roa"
  std::string tag;    // provenance of the matched constraint
  std::string label;
  std::string poly;   // polynomial text
  std::optional<GramData> gram;  // present for SOS multipliers
};

// Everything a third party needs to re-verify the algebraic identity without
// a solver: V, every multiplier, every Gram matrix and basis, the region, and
// the options that reproduce the constraint set.
struct Certificate {
  std::string tool_version;
  std::string mode;  // "global" | "local" | "robust"
  bool feasible = false;
  std::uint64_t seed = 0;

  int v_degree = 4;
  int mult_degree = 2;
  int eq_degree = 3;
  int roa_k = 1;
  double epsilon = 1e-4;  // effective after normalization
  bool use_slope = true;
  bool all_pairs_slope = false;
  std::string support = "full";
  bool output_bias_shifted = false;

  Box region;
  std::vector<std::string> custom_region;
  int shrink_iterations = 0;

  std::string v_text;
  GramData v_gram;
  GramData derivative_gram;
  std::vector<MultiplierData> multipliers;

  double gamma = std::numeric_limits<double>::quiet_NaN();
  std::vector<MultiplierData> roa_multipliers;
  std::vector<GramData> roa_grams;

  std::string solve_status;
  int iterations = 0;
  double res_primal = 0.0, res_dual = 0.0, res_gap = 0.0;
  double min_gram_eig = 0.0, recon_residual = 0.0;
  ViolationReport soundness;

  std::string definition_sha256;  // filled by the file layer
  std::string network_sha256;

  bool has_gamma() const { return !std::isnan(gamma); }
};

struct StabilityResult {
  bool feasible = false;
  SolveStatus status = SolveStatus::Stalled;
  std::string message;
  Certificate certificate;
  Box final_region;
  std::vector<Polynomial> final_custom_region;
  int shrink_iterations = 0;
  std::vector<std::string> iteration_log;
};

// Global stability program: network constraints valid everywhere (no IBP
// boxes), no region multipliers.
StabilityResult certify_global(const ProblemSpec& spec);

// Local program over spec.region with region multipliers and IBP-dependent
// constraints. Robust problems (delta present) route through here too.
StabilityResult certify_local(const ProblemSpec& spec);

// Shrink loop: IBP -> abstraction -> local solve; on infeasibility contract
// the region about the origin by shrink_factor and retry.
StabilityResult run_algorithm1(const ProblemSpec& spec);

// Parameterised certification; requires delta_var/delta_interval.
StabilityResult certify_robust(const ProblemSpec& spec);

// Level-set maximization on a feasible result: for every region polynomial
// d_k, |z|^{2k} (V - gamma) + p_k(z) d_k(z) in Sigma[z], maximize the shared
// gamma. Updates result.certificate (gamma, roa multipliers).
bool roa_maximize(const ProblemSpec& spec, StabilityResult& result,
                  std::string* error = nullptr);

// Trajectory oracle for {V <= gamma}: n random starts inside the level set
// must converge under the true dynamics.
struct RoaTrajectoryReport {
  int attempted = 0;
  int converged = 0;
  bool pass() const { return attempted > 0 && converged == attempted; }
};
RoaTrajectoryReport roa_trajectories_converge(const ProblemSpec& spec,
                                              const StabilityResult& result,
                                              int n, std::uint64_t seed,
                                              double delta_value = 0.0);

// Solver-free re-verification of a certificate against a problem definition.
struct CheckReport {
  bool pass = false;
  double max_identity_residual = 0.0;
  double min_gram_eig = 0.0;
  ViolationReport soundness;
  std::vector<std::string> failures;
};
CheckReport check_certificate(const ProblemSpec& spec, const Certificate& cert,
                              int nsamples);

std::string certificate_to_json(const Certificate& cert);
Certificate certificate_from_json(const std::string& text);

// Constraint dump for --dump-constraints (post-elimination, with tags).
std::string dump_problem_constraints(const ProblemSpec& spec, bool global_mode);

// The lowered certification SDP at the problem's own region, for export to
// external conic solvers.
SdpProblem lower_certification_sdp(const ProblemSpec& spec, bool global_mode);

std::string tool_version();

}  // namespace nnsos
