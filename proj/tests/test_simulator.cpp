#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "nnsos/polyparse.hpp"
#include "nnsos/simulator.hpp"

using namespace nnsos;

namespace {

Rhs decay() {
  return [](std::span<const double> z, std::span<double> dz) { dz[0] = -z[0]; };
}

NeuralNetwork zero_controller(int in_dim) {
  Mat W1(1, in_dim);
  Mat W2(1, 1);
  return NeuralNetwork({{W1, {0.0}}}, {W2, {0.0}}, Activation::Tanh);
}

}  // namespace

TEST_CASE("rk4 single step matches the exponential") {
  SimConfig cfg;
  cfg.step = 0.1;
  cfg.horizon = 0.1;
  Vec z0 = {1.0};
  Trajectory t = integrate(decay(), z0, cfg);
  REQUIRE(t.states.size() == 2);
  // RK4 local error is O(h^5): |z1 - e^-0.1| ~ 1e-8.
  CHECK(t.states[1][0] == doctest::Approx(0.9048375).epsilon(1e-7));
  CHECK(std::abs(t.states[1][0] - std::exp(-0.1)) < 1e-7);
}

TEST_CASE("equilibrium stays put") {
  SimConfig cfg;
  cfg.step = 0.01;
  cfg.horizon = 1.0;
  Vec z0 = {0.0};
  Trajectory t = integrate(decay(), z0, cfg);
  CHECK(t.converged);  // inside the radius from step one
  for (auto& s : t.states) CHECK(s[0] == 0.0);
}

TEST_CASE("rk4 order check: halving the step cuts the error ~16x") {
  auto endpoint_error = [&](double h) {
    SimConfig cfg;
    cfg.step = h;
    cfg.horizon = 1.0;
    cfg.convergence_radius = 0.0;  // run to the horizon
    Vec z0 = {1.0};
    Trajectory t = integrate(decay(), z0, cfg);
    return std::abs(t.states.back()[0] - std::exp(-1.0));
  };
  double e1 = endpoint_error(0.1);
  double e2 = endpoint_error(0.05);
  double ratio = e1 / e2;
  CHECK(ratio >= 12.0);
  CHECK(ratio <= 20.0);
}

TEST_CASE("undamped pendulum conserves energy to 1e-6 over 10 s") {
  const double m = 0.15, l = 0.5, g = 9.81;
  Rhs rhs = [&](std::span<const double> z, std::span<double> dz) {
    dz[0] = z[1];
    dz[1] = (g / l) * std::sin(z[0]);
  };
  SimConfig cfg;
  cfg.step = 1e-3;
  cfg.horizon = 10.0;
  cfg.convergence_radius = 0.0;
  Vec z0 = {0.5, 0.0};
  Trajectory t = integrate(rhs, z0, cfg);
  auto energy = [&](const Vec& z) {
    return 0.5 * m * l * l * z[1] * z[1] + m * g * l * std::cos(z[0]);
  };
  double e0 = energy(t.states.front());
  double worst = 0.0;
  for (auto& s : t.states)
    worst = std::max(worst, std::abs(energy(s) - e0) / std::abs(e0));
  CHECK(worst <= 1e-6);
}

TEST_CASE("unstable system never converges; divergence is flagged") {
  Rhs rhs = [](std::span<const double> z, std::span<double> dz) {
    dz[0] = z[0];
  };
  SimConfig cfg;
  cfg.step = 0.01;
  cfg.horizon = 50.0;
  Box box{{-2.0}, {2.0}};
  auto pts = basin_sample_grid(rhs, box, 9, cfg);
  for (auto& p : pts) {
    if (std::abs(p.z0[0]) > 1e-9) CHECK(!p.converged);
  }
  Vec z0 = {1.0};
  Trajectory t = integrate(rhs, z0, cfg);
  CHECK(t.exit_reason == ExitReason::Diverged);
}

TEST_CASE("basin sampling is deterministic for a fixed seed") {
  Rhs rhs = [](std::span<const double> z, std::span<double> dz) {
    dz[0] = -z[0] + 0.1 * z[1];
    dz[1] = -z[1];
  };
  SimConfig cfg;
  cfg.step = 0.05;
  cfg.horizon = 20.0;
  Box box{{-1.0, -1.0}, {1.0, 1.0}};
  auto a = basin_sample_random(rhs, box, 64, 42, cfg);
  auto b = basin_sample_random(rhs, box, 64, 42, cfg);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].z0 == b[i].z0);  // bitwise
    CHECK(a[i].converged == b[i].converged);
  }
}

TEST_CASE("closed-loop rhs evaluates recast variables with the true sine") {
  auto space = std::make_shared<VariableSpace>();
  auto z1 = space->add("z1"), z2 = space->add("z2"), z3 = space->add("z3");
  auto u = space->add("u1");
  ProblemSpec spec;
  spec.space = space;
  spec.state_vars = {z1, z2};
  spec.aux_rules = {{AuxKind::XMinusSin, z3, z1}};
  spec.input_vars = {u};
  spec.dynamics = {
      parse_polynomial("z2", *space),
      parse_polynomial("19.62*z1 - 19.62*z3 - 13.333*z2 + 26.667*u1", *space),
  };
  spec.nn = std::make_shared<NeuralNetwork>(zero_controller(2));
  spec.region = {{-0.5, -1.0}, {0.5, 1.0}};
  spec.u_max = 1.0;

  Rhs rhs = make_closed_loop_rhs(spec);
  Vec z = {0.4, -0.2}, dz(2);
  rhs(z, dz);
  CHECK(dz[0] == doctest::Approx(-0.2));
  // 19.62*(z1 - (z1 - sin z1)) = 19.62*sin(z1); controller output is zero.
  double expect = 19.62 * std::sin(0.4) - 13.333 * (-0.2);
  CHECK(dz[1] == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("certificate sampling flags a negated V immediately") {
  auto space = std::make_shared<VariableSpace>();
  auto z1 = space->add("z1");
  auto u = space->add("u1");
  ProblemSpec spec;
  spec.space = space;
  spec.state_vars = {z1};
  spec.input_vars = {u};
  spec.dynamics = {parse_polynomial("-z1 + u1", *space)};
  spec.nn = std::make_shared<NeuralNetwork>(zero_controller(1));
  spec.region = {{-1.0}, {1.0}};

  Polynomial V = parse_polynomial("z1^2", *space);
  ViolationReport good = sample_certificate(spec, V, 1e-4, spec.region, 2000, 7);
  CHECK(good.pass());
  CHECK(good.worst_derivative_margin <= 0.0);

  ViolationReport bad =
      sample_certificate(spec, -V, 1e-4, spec.region, 2000, 7);
  CHECK(!bad.pass());
  CHECK(bad.positivity_violations > 0);
}
