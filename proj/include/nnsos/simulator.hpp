#pragma once

#include <functional>
#include <string>

#include "nnsos/problem.hpp"

namespace nnsos {

struct SimConfig {
  double step = 0.01;               // s
  double horizon = 30.0;            // s
  double convergence_radius = 1e-3;
  double blowup = 1e6;

  void check() const;
};

enum class ExitReason { Converged, Horizon, Diverged };

struct Trajectory {
  std::vector<double> times;
  std::vector<Vec> states;
  bool converged = false;
  ExitReason exit_reason = ExitReason::Horizon;
};

using Rhs = std::function<void(std::span<const double>, std::span<double>)>;

// Classical fixed-step RK4. Convergence is declared once |z| stays within the
// radius for 50 consecutive steps; NaN or |z| > blowup means divergence.
Trajectory integrate(const Rhs& rhs, std::span<const double> z0,
                     const SimConfig& cfg);

// True closed-loop right-hand side: recast variables evaluated exactly
// (sin, not the sector), the network evaluated exactly, input saturated at
// u_max. delta_value is ignored unless the problem carries an uncertainty.
Rhs make_closed_loop_rhs(const ProblemSpec& spec, double delta_value = 0.0);

struct BasinPoint {
  Vec z0;
  bool converged = false;
};

// Deterministic grid classification over the region box.
std::vector<BasinPoint> basin_sample_grid(const Rhs& rhs, const Box& box,
                                          int per_dim, const SimConfig& cfg);
// Deterministic pseudo-random classification (fixed seed).
std::vector<BasinPoint> basin_sample_random(const Rhs& rhs, const Box& box,
                                            int count, std::uint64_t seed,
                                            const SimConfig& cfg);

struct ViolationReport {
  int samples = 0;
  int positivity_violations = 0;
  int derivative_violations = 0;
  // Margins: min of V - eps|z|^2 (1 - 1e-6) and max of Vdot - 1e-6 (1+|z|^2).
  double worst_positivity_margin = 0.0;
  double worst_derivative_margin = 0.0;
  bool pass() const {
    return positivity_violations == 0 && derivative_violations == 0;
  }
};

// Samples V >= eps|z|^2 and Vdot <= 0 (with the standard relative slack)
// against the true closed loop at n uniform points of the box. For robust
// problems the check runs at every delta in delta_values.
ViolationReport sample_certificate(const ProblemSpec& spec, const Polynomial& V,
                                   double epsilon, const Box& box, int n,
                                   std::uint64_t seed,
                                   std::span<const double> delta_values = {});

void write_trajectory_csv(const std::string& path, const Trajectory& t,
                          std::span<const std::string> state_names);
void write_basin_csv(const std::string& path,
                     std::span<const BasinPoint> points,
                     std::span<const std::string> state_names);

}  // namespace nnsos
