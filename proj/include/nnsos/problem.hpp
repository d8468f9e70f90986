#pragma once

#include <limits>
#include <memory>
#include <optional>

#include "nnsos/nn.hpp"
#include "nnsos/sdp.hpp"

namespace nnsos {

// Recasting rule kinds: how an auxiliary variable tracks the true states.
enum class AuxKind {
  XMinusSin,  // aux = driver - sin(driver)
};

struct AuxRule {
  AuxKind kind = AuxKind::XMinusSin;
  VarId var;
  VarId driver;

  double evaluate(double driver_value) const;
  // Sector slope bound over a driver interval.
  double sector_alpha(double lo, double hi) const;
};

enum class MultiplierSupport {
  Full,    // multipliers over every SOS variable
  States,  // multipliers over states, recast variables and delta only
};

struct CertOptions {
  int v_degree = 4;
  int mult_degree = -1;      // s_i and p_k; -1 = v_degree-2 rounded up to even
  int eq_degree = -1;        // t_j; -1 = v_degree-1
  int roa_k = 1;             // |z|^{2k} factor
  double epsilon = 1e-4;     // rho(z) = epsilon * sum z_i^2
  bool use_slope = true;
  bool all_pairs_slope = false;
  MultiplierSupport support = MultiplierSupport::Full;
  double shrink_factor = 0.75;
  int max_shrink_iters = 10;
  double psd_tol = 1e-6;
  double recon_tol = 1e-6;
  double equilibrium_tol = 1e-8;
  bool shift_output_bias = false;
  std::uint64_t seed = 0;
  int soundness_samples = 10000;
  double sim_step = 0.01;
  double sim_horizon = 30.0;
  SolverOptions solver;

  int effective_mult_degree() const {
    if (mult_degree >= 0) return mult_degree + (mult_degree % 2);
    int d = v_degree - 2;
    if (d < 0) d = 0;
    return d + (d % 2);
  }
  int effective_eq_degree() const {
    return eq_degree >= 0 ? eq_degree : std::max(v_degree - 1, 0);
  }
};

// One closed-loop certification problem: plant polynomials over the states,
// recast variables, inputs and optional uncertainty, with the controller and
// the region of interest.
struct ProblemSpec {
  std::shared_ptr<VariableSpace> space;
  std::vector<VarId> state_vars;
  std::vector<AuxRule> aux_rules;
  std::vector<VarId> input_vars;
  std::optional<VarId> delta_var;
  std::optional<std::pair<double, double>> delta_interval;
  std::vector<Polynomial> dynamics;  // one per state
  std::shared_ptr<const NeuralNetwork> nn;
  Box region;
  std::vector<Polynomial> custom_region;
  double u_max = std::numeric_limits<double>::infinity();
  CertOptions opts;

  void check() const;
  bool robust() const { return delta_var.has_value(); }
};

}  // namespace nnsos
