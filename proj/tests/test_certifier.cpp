#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "nnsos/certifier.hpp"
#include "nnsos/polyparse.hpp"

using namespace nnsos;

namespace {

NeuralNetwork zero_controller(int in_dim) {
  Mat W1(1, in_dim);
  Mat W2(1, 1);
  return NeuralNetwork({{W1, {0.0}}}, {W2, {0.0}}, Activation::Tanh);
}

// One-state plant with a disabled controller input.
ProblemSpec scalar_spec(const std::string& rhs, double half_width) {
  ProblemSpec spec;
  spec.space = std::make_shared<VariableSpace>();
  auto z1 = spec.space->add("z1");
  auto u1 = spec.space->add("u1");
  spec.state_vars = {z1};
  spec.input_vars = {u1};
  spec.dynamics = {parse_polynomial(rhs, *spec.space)};
  spec.nn = std::make_shared<NeuralNetwork>(zero_controller(1));
  spec.region = {{-half_width}, {half_width}};
  spec.opts.v_degree = 2;
  spec.opts.solver.max_iter = 100;
  return spec;
}

}  // namespace

TEST_CASE("stable scalar system yields V = z^2 globally") {
  ProblemSpec spec = scalar_spec("-z1 + u1", 1.0);
  StabilityResult res = certify_global(spec);
  REQUIRE(res.feasible);
  CHECK(res.status == SolveStatus::Feasible);
  Polynomial V = parse_polynomial(res.certificate.v_text, *spec.space);
  // Quadratic-trace normalization pins the z1^2 coefficient to 1.
  CHECK(V.coefficient(Monomial::var(spec.state_vars[0], 2)) ==
        doctest::Approx(1.0).epsilon(1e-6));
  CHECK(res.certificate.soundness.pass());
}

TEST_CASE("unstable scalar system is infeasible at every degree") {
  for (int deg : {2, 4, 6}) {
    CAPTURE(deg);
    ProblemSpec spec = scalar_spec("z1 + u1", 1.0);
    spec.opts.v_degree = deg;
    StabilityResult res = certify_global(spec);
    CHECK(!res.feasible);
    CHECK(res.status == SolveStatus::PrimalInfeasible);
  }
}

TEST_CASE("local certification rejects a region that excludes the origin") {
  ProblemSpec spec = scalar_spec("-z1 + u1", 1.0);
  spec.region = {{0.5}, {1.0}};
  CHECK_THROWS_WITH_AS(certify_local(spec), doctest::Contains("origin"), Error);
}

TEST_CASE("equilibrium gate refuses a biased controller unless shifted") {
  ProblemSpec spec = scalar_spec("-z1 + u1", 1.0);
  Mat W1(1, 1), W2(1, 1);
  spec.nn = std::make_shared<NeuralNetwork>(
      NeuralNetwork({{W1, {0.0}}}, {W2, {0.25}}, Activation::Tanh));
  CHECK_THROWS_WITH_AS(certify_local(spec), doctest::Contains("equilibrium"),
                       Error);
  spec.opts.shift_output_bias = true;
  StabilityResult res = certify_local(spec);
  CHECK(res.feasible);
  CHECK(res.certificate.output_bias_shifted);
}

TEST_CASE("shrink loop follows the provable feasibility threshold") {
  // zdot = -z + z^3 is certifiable on [-h, h] exactly when h < 1 (with a
  // quartic V the interior sign pattern forces infeasibility for h >= 1).
  // Schedule from h = 2 with factor 0.75: 2, 1.5, 1.125, 0.84375 -> iteration 3.
  ProblemSpec spec = scalar_spec("-z1 + z1^3 + u1", 2.0);
  spec.opts.v_degree = 4;
  spec.opts.mult_degree = 4;
  spec.opts.max_shrink_iters = 6;

  SUBCASE("direct local solves bracket the threshold") {
    ProblemSpec wide = spec;
    wide.region = {{-1.125}, {1.125}};
    CHECK(!certify_local(wide).feasible);
    ProblemSpec narrow = spec;
    narrow.region = {{-0.84375}, {0.84375}};
    CHECK(certify_local(narrow).feasible);
  }

  SUBCASE("algorithm runs the schedule") {
    StabilityResult res = run_algorithm1(spec);
    REQUIRE(res.feasible);
    CHECK(res.shrink_iterations == 3);
    CHECK(res.final_region.upper[0] == doctest::Approx(0.84375));
    // Strictly nested in the initial region.
    CHECK(res.final_region.upper[0] < spec.region.upper[0]);
    CHECK(res.final_region.lower[0] > spec.region.lower[0]);
  }

  SUBCASE("zero shrink budget fails immediately when infeasible") {
    ProblemSpec capped = spec;
    capped.opts.max_shrink_iters = 0;
    StabilityResult res = run_algorithm1(capped);
    CHECK(!res.feasible);
    CHECK(res.iteration_log.size() == 1);
  }

  SUBCASE("feasible initial region exits with zero iterations") {
    ProblemSpec easy = spec;
    easy.region = {{-0.5}, {0.5}};
    StabilityResult res = run_algorithm1(easy);
    REQUIRE(res.feasible);
    CHECK(res.shrink_iterations == 0);
  }
}

TEST_CASE("roa level set of the paraboloid in the unit disk") {
  ProblemSpec spec = scalar_spec("-z1 + u1", 1.0);
  // Two states for the classic oracle.
  spec.space = std::make_shared<VariableSpace>();
  auto z1 = spec.space->add("z1"), z2 = spec.space->add("z2");
  auto u1 = spec.space->add("u1");
  spec.state_vars = {z1, z2};
  spec.input_vars = {u1};
  spec.dynamics = {parse_polynomial("-z1 + u1", *spec.space),
                   parse_polynomial("-z2", *spec.space)};
  spec.nn = std::make_shared<NeuralNetwork>(zero_controller(2));
  spec.region = {{-1.0, -1.0}, {1.0, 1.0}};
  spec.custom_region = {parse_polynomial("1 - z1^2 - z2^2", *spec.space)};

  StabilityResult res;
  res.feasible = true;
  res.final_region = spec.region;
  res.final_custom_region = spec.custom_region;
  res.certificate.feasible = true;
  res.certificate.v_text = "z1^2 + z2^2";
  res.certificate.v_gram = {};  // unused by roa_maximize

  std::string err;
  REQUIRE(roa_maximize(spec, res, &err));
  CHECK(res.certificate.gamma == doctest::Approx(1.0).epsilon(1e-6));

  // Scale equivariance: V x10 gives gamma x10 (the level set is unchanged).
  StabilityResult res10 = res;
  res10.certificate.v_text = "10*z1^2 + 10*z2^2";
  res10.certificate.gamma = std::numeric_limits<double>::quiet_NaN();
  REQUIRE(roa_maximize(spec, res10, &err));
  CHECK(res10.certificate.gamma ==
        doctest::Approx(10.0 * res.certificate.gamma).epsilon(1e-6));
}

TEST_CASE("certificate JSON round-trip and solver-free recheck") {
  ProblemSpec spec = scalar_spec("-z1 + 0.25*z1^3 + u1", 0.5);
  spec.opts.v_degree = 4;
  spec.opts.mult_degree = 4;
  StabilityResult res = certify_local(spec);
  REQUIRE(res.feasible);

  std::string json = certificate_to_json(res.certificate);
  Certificate back = certificate_from_json(json);
  CHECK(back.v_text == res.certificate.v_text);
  CHECK(back.multipliers.size() == res.certificate.multipliers.size());
  CHECK(certificate_to_json(back) == json);  // canonical form

  CheckReport rep = check_certificate(spec, back, 2000);
  CHECK(rep.pass);
  CHECK(rep.max_identity_residual <= 1e-6);

  // Tampering with V breaks the algebraic identity.
  Certificate bad = back;
  bad.v_text = "1.5*(" + bad.v_text + ")";
  CheckReport brep = check_certificate(spec, bad, 0);
  CHECK(!brep.pass);

  // Dump output carries tags for audit.
  std::string dump = dump_problem_constraints(spec, false);
  CHECK(dump.find("region") != std::string::npos);
  CHECK(dump.find("tanh-sector") != std::string::npos);
}

TEST_CASE("extreme uncertainty interval returns a status without crashing") {
  // Stress case: a huge delta interval on a tiny region. Any honest status
  // (feasible or infeasible) is acceptable; the contract is no crash and no
  // unsound acceptance.
  ProblemSpec spec = scalar_spec("-z1 + u1", 0.05);
  spec.delta_var = spec.space->add("delta");
  spec.delta_interval = {{0.1, 100.0}};
  spec.dynamics = {parse_polynomial("-delta*z1 + u1", *spec.space)};
  spec.opts.v_degree = 2;
  spec.opts.mult_degree = 2;
  StabilityResult res = certify_robust(spec);
  CHECK((res.status == SolveStatus::Feasible ||
         res.status == SolveStatus::Optimal ||
         res.status == SolveStatus::PrimalInfeasible ||
         res.status == SolveStatus::Stalled));
  if (res.feasible) CHECK(res.certificate.soundness.pass());
}

TEST_CASE("roa trajectories from inside the level set converge") {
  ProblemSpec spec = scalar_spec("-z1 + z1^3 + u1", 0.5);
  spec.opts.v_degree = 4;
  spec.opts.mult_degree = 4;
  StabilityResult res = certify_local(spec);
  REQUIRE(res.feasible);
  std::string err;
  REQUIRE(roa_maximize(spec, res, &err));
  CHECK(res.certificate.gamma > 0.0);
  RoaTrajectoryReport rep = roa_trajectories_converge(spec, res, 25, 11);
  CHECK(rep.pass());
}
