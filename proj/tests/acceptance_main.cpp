// Acceptance suite: one test case per criterion, each printing a single
// pass/fail line with its runtime. Heavy benchmarks run through the CLI (the
// shipped surface); oracles and soundness gates run in-process.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "analytic_sdps.hpp"
#include "nnsos/certifier.hpp"
#include "nnsos/polyparse.hpp"
#include "nnsos/simulator.hpp"
#include "nnsos/sosprog.hpp"
#include "nnsos/sysdef.hpp"

using namespace nnsos;
namespace fs = std::filesystem;

#ifndef NNSOS_CLI_PATH
#error "NNSOS_CLI_PATH must point at the built CLI"
#endif
#ifndef NNSOS_BENCH_DIR
#error "NNSOS_BENCH_DIR must point at the bundled benchmarks"
#endif

namespace {

struct Gate {
  const char* name;
  double budget_s;
  std::chrono::steady_clock::time_point t0;
  bool ok = true;

  explicit Gate(const char* n, double budget)
      : name(n), budget_s(budget), t0(std::chrono::steady_clock::now()) {}

  void check(bool cond, const std::string& what) {
    ok &= cond;
    CHECK_MESSAGE(cond, name, ": ", what);
  }

  ~Gate() {
    double dt = std::chrono::duration<double>(
                    std::chrono::steady_clock::now() - t0)
                    .count();
    bool in_budget = dt <= budget_s;
    CHECK_MESSAGE(in_budget, name, " exceeded its runtime budget");
    std::printf("[%s] %s (%.1f s, budget %.0f s)\n",
                ok && in_budget ? "PASS" : "FAIL", name, dt, budget_s);
    std::fflush(stdout);
  }
};

fs::path scratch() {
  static fs::path dir = [] {
    fs::path d = fs::temp_directory_path() / "nnsos_acceptance";
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

std::string bench(const std::string& name) {
  return (fs::path(NNSOS_BENCH_DIR) / name).string();
}

int run_cli(const std::string& args, const std::string& log_name) {
  std::string log = (scratch() / log_name).string();
  std::string cmd = std::string(NNSOS_CLI_PATH) + " " + args + " > " + log +
                    " 2>&1";
  int status = std::system(cmd.c_str());
  if (status == -1) return -1;
  return WEXITSTATUS(status);
}

Certificate load_cert(const fs::path& p) {
  std::ifstream in(p);
  REQUIRE_MESSAGE(in.good(), "missing certificate file ", p.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return certificate_from_json(ss.str());
}

bool same_bytes(const fs::path& a, const fs::path& b) {
  std::ifstream fa(a, std::ios::binary), fb(b, std::ios::binary);
  std::stringstream sa, sb;
  sa << fa.rdbuf();
  sb << fb.rdbuf();
  return fa.good() && fb.good() && sa.str() == sb.str();
}

Polynomial random_square_sum(std::mt19937_64& rng, std::span<const VarId> vars,
                             int max_squares) {
  std::uniform_int_distribution<int> nsq(1, max_squares);
  std::uniform_int_distribution<int> coef(-8, 8);
  std::uniform_int_distribution<int> pick(0, static_cast<int>(vars.size()) - 1);
  std::uniform_int_distribution<int> deg(0, 3);
  Polynomial sum;
  int n = nsq(rng);
  for (int s = 0; s < n; ++s) {
    Polynomial r;
    int terms = 1 + nsq(rng);
    for (int t = 0; t < terms; ++t) {
      Monomial m;
      int d = deg(rng);
      for (int k = 0; k < d; ++k) m = m.times(Monomial::var(vars[pick(rng)]));
      r.add_term(coef(rng) * 0.25, m);
    }
    r.canonicalize();
    sum += r * r;
  }
  return sum;
}

}  // namespace

TEST_CASE("criterion 1: SOS kernel oracle suite") {
  Gate g("criterion 1: SOS kernel oracles", 120.0);
  VariableSpace sp;
  std::vector<VarId> vars = {sp.add("x"), sp.add("y"), sp.add("z")};
  std::mt19937_64 rng(20240501);
  int certified = 0;
  for (int trial = 0; trial < 50; ++trial) {
    Polynomial p = random_square_sum(rng, vars, 4);
    if (p.is_zero()) {
      p = Polynomial::term(1.0, Monomial::var(vars[0], 2));
    }
    SosProgram prog;
    prog.add_sos_constraint(LinPoly::from(p), "p");
    ConicSolution sol = solve_sdp(prog.lower());
    SosSolution sos = prog.reconstruct(sol, 1e-6, 1e-6);
    g.check(sos.accepted, "random SOS trial " + std::to_string(trial));
    if (sos.accepted) {
      g.check(sos.max_recon_residual <= 1e-6,
              "Gram reconstruction residual trial " + std::to_string(trial));
      ++certified;
    }
  }
  g.check(certified == 50, "all 50 random sums of squares certified");

  // Motzkin: nonnegative but not SOS; the lowered SDP must be infeasible.
  Polynomial motzkin =
      Polynomial::term(1, Monomial::var(vars[0], 4).times(Monomial::var(vars[1], 2))) +
      Polynomial::term(1, Monomial::var(vars[0], 2).times(Monomial::var(vars[1], 4))) -
      Polynomial::term(3, Monomial::var(vars[0], 2).times(Monomial::var(vars[1], 2))) +
      Polynomial(1.0);
  SosProgram mprog;
  mprog.add_sos_constraint(LinPoly::from(motzkin), "motzkin");
  ConicSolution msol = solve_sdp(mprog.lower());
  g.check(msol.status == SolveStatus::PrimalInfeasible,
          "Motzkin rejected as SOS");
  g.check(!msol.ray_y.empty() && msol.ray_residual <= 1e-6,
          "Motzkin rejection carries an improving-ray certificate");

  // Any odd polynomial is rejected outright (no covering Gram basis).
  SosProgram oprog;
  bool threw = false;
  try {
    oprog.add_sos_constraint(LinPoly::from(Polynomial::variable(vars[0])), "x");
  } catch (const Error&) {
    threw = true;
  }
  g.check(threw, "odd polynomial rejected");
}

TEST_CASE("criterion 2: SDP solver analytic corpus") {
  Gate g("criterion 2: SDP analytic corpus", 10.0);
  for (auto& c : analytic::corpus()) {
    ConicSolution sol = solve_sdp(c.prob);
    if (c.feasibility) {
      g.check(sol.status == SolveStatus::Feasible,
              std::string(c.name) + " reported feasible");
    } else {
      g.check(sol.status == SolveStatus::Optimal,
              std::string(c.name) + " reported optimal");
      g.check(std::abs(sol.primal_obj - c.expected) <= 1e-6,
              std::string(c.name) + " objective within 1e-6 (" + c.derivation +
                  ")");
    }
    ValidationReport rep = validate_solution(c.prob, sol);
    g.check(rep.status_consistent, std::string(c.name) + " validates");
  }
  ConicSolution bad = solve_sdp(analytic::contradictory_equality());
  g.check(bad.status == SolveStatus::PrimalInfeasible,
          "contradictory equality reported primal_infeasible");
  g.check(!bad.ray_y.empty(), "contradiction carries a Farkas certificate");
}

TEST_CASE("criterion 3: Duffing oscillator, global certification") {
  Gate g("criterion 3: Duffing global", 300.0);
  fs::path cert_path = scratch() / "duffing.cert.json";
  int rc = run_cli("certify " + bench("duffing.toml") +
                       " --global --v-degree 4 --mult-degree 2 --seed 0 -o " +
                       cert_path.string(),
                   "duffing.log");
  g.check(rc == 0, "CLI exits 0");
  Certificate cert = load_cert(cert_path);
  g.check(cert.feasible, "certificate is feasible");
  g.check(cert.soundness.samples >= 10000, "gate sampled 10^4 points");
  g.check(cert.soundness.pass(), "embedded soundness gate passed");

  // Independent 10^4-point re-check against the true network.
  SystemDefinition def = load_system_definition(bench("duffing.toml"));
  Polynomial V = parse_polynomial(cert.v_text, *def.spec.space);
  Box sbox{{-3.0, -3.0}, {3.0, 3.0}};
  ViolationReport vr =
      sample_certificate(def.spec, V, cert.epsilon, sbox, 10000, 99);
  g.check(vr.pass(), "independent 10^4-point soundness sampling");
}

TEST_CASE("criterion 4: three-state plant, quadratic V and basin containment") {
  Gate g("criterion 4: three-state system", 900.0);
  fs::path cert_path = scratch() / "threestate.cert.json";
  int rc = run_cli("certify " + bench("threestate.toml") +
                       " --max-shrink 0 --seed 0 -o " + cert_path.string(),
                   "threestate.log");
  g.check(rc == 0, "CLI exits 0 with the bundled 5x5 tanh controller");
  fs::path roa_path = scratch() / "threestate.roa.json";
  int rr = run_cli("roa " + cert_path.string() + " " + bench("threestate.toml") +
                       " --csv " + (scratch() / "threestate_ls.csv").string() +
                       " -o " + roa_path.string(),
                   "threestate_roa.log");
  g.check(rr == 0, "ROA maximization succeeds");
  Certificate cert = load_cert(roa_path);
  g.check(cert.v_degree == 2, "quadratic Lyapunov candidate");
  g.check(cert.has_gamma() && cert.gamma > 0, "positive level gamma");

  SystemDefinition def = load_system_definition(bench("threestate.toml"));
  Polynomial V = parse_polynomial(cert.v_text, *def.spec.space);
  SimConfig cfg;
  cfg.step = def.spec.opts.sim_step;
  cfg.horizon = def.spec.opts.sim_horizon;
  Rhs rhs = make_closed_loop_rhs(def.spec);
  auto basin = basin_sample_grid(rhs, def.spec.region, 15, cfg);
  g.check(basin.size() == 15 * 15 * 15, "15^3 basin grid evaluated");
  Vec pt(def.spec.space->size(), 0.0);
  int inside = 0, inside_bad = 0;
  for (auto& b : basin) {
    for (std::size_t i = 0; i < b.z0.size(); ++i)
      pt[def.spec.state_vars[i].index] = b.z0[i];
    if (V.evaluate(pt) <= cert.gamma) {
      ++inside;
      if (!b.converged) ++inside_bad;
    }
  }
  g.check(inside > 0, "level set contains grid points");
  g.check(inside_bad == 0,
          "zero diverging points inside {V <= gamma} (" +
              std::to_string(inside) + " inside)");
}

TEST_CASE("criterion 5: inverted pendulum, recast + saturation + ROA") {
  Gate g("criterion 5: inverted pendulum", 1200.0);
  fs::path cert4 = scratch() / "pendulum.cert.json";
  int rc = run_cli("certify " + bench("pendulum.toml") +
                       " --max-shrink 0 --seed 0 -o " + cert4.string(),
                   "pendulum.log");
  g.check(rc == 0, "quartic V feasible in the benchmark box");
  fs::path roa4 = scratch() / "pendulum.roa.json";
  int rr = run_cli("roa " + cert4.string() + " " + bench("pendulum.toml") +
                       " --csv " + (scratch() / "pendulum_ls.csv").string() +
                       " -o " + roa4.string(),
                   "pendulum_roa.log");
  g.check(rr == 0, "ROA maximization succeeds");
  Certificate cert = load_cert(roa4);
  g.check(cert.v_degree == 4, "quartic Lyapunov candidate");
  g.check(cert.has_gamma() && cert.gamma > 0, "gamma > 0");
  g.check(cert.region.lower == Vec{-0.3, -1.4} &&
              cert.region.upper == Vec{0.3, 1.4},
          "benchmark box certified without shrinking");

  // Recast sector alpha per the chord formula at the box bounds.
  double alpha_formula =
      std::max((0.3 - std::sin(0.3)) / 0.3, (-0.3 - std::sin(-0.3)) / -0.3);
  SystemDefinition def = load_system_definition(bench("pendulum.toml"));
  double alpha_used =
      def.spec.aux_rules[0].sector_alpha(cert.region.lower[0],
                                         cert.region.upper[0]);
  g.check(std::abs(alpha_used - alpha_formula) <= 1e-12,
          "recast sector slope follows the endpoint chord formula");
  CheckReport chk = check_certificate(def.spec, cert, 0);
  g.check(chk.pass, "certificate identities re-verify (alpha consistent)");

  // 100 trajectories from inside {V <= gamma} under true sin/sat dynamics.
  StabilityResult res;
  res.feasible = true;
  res.final_region = cert.region;
  res.certificate = cert;
  RoaTrajectoryReport traj = roa_trajectories_converge(def.spec, res, 100, 7);
  g.check(traj.attempted == 100, "drew 100 starts inside the level set");
  g.check(traj.converged == traj.attempted,
          "all sampled trajectories converge to |z| <= 1e-3");

  // Degree monotonicity of the certified level under the shared
  // quadratic-trace normalization.
  fs::path cert2 = scratch() / "pendulum_deg2.cert.json";
  int rc2 = run_cli("certify " + bench("pendulum.toml") +
                        " --v-degree 2 --max-shrink 0 --seed 0 -o " +
                        cert2.string(),
                    "pendulum2.log");
  g.check(rc2 == 0, "quadratic V also feasible");
  fs::path roa2 = scratch() / "pendulum_deg2.roa.json";
  int rr2 = run_cli("roa " + cert2.string() + " " + bench("pendulum.toml") +
                        " --csv " + (scratch() / "pendulum_ls2.csv").string() +
                        " -o " + roa2.string(),
                    "pendulum2_roa.log");
  g.check(rr2 == 0, "ROA maximization succeeds at degree 2");
  Certificate c2 = load_cert(roa2);
  g.check(c2.has_gamma() && cert.gamma >= c2.gamma,
          "gamma(degree 4) >= gamma(degree 2): " +
              format_double(cert.gamma) + " vs " + format_double(c2.gamma));
}

TEST_CASE("criterion 6: robust pendulum over the uncertainty interval") {
  Gate g("criterion 6: robust pendulum", 1200.0);
  fs::path cert_path = scratch() / "robust.cert.json";
  int rc = run_cli("robust " + bench("pendulum_robust.toml") +
                       " --max-shrink 0 --seed 0 -o " + cert_path.string(),
                   "robust.log");
  g.check(rc == 0, "parameterised certification feasible");
  Certificate cert = load_cert(cert_path);
  g.check(cert.mode == "robust", "robust mode recorded");
  g.check(cert.v_degree == 2, "quadratic parameterised V");

  SystemDefinition def = load_system_definition(bench("pendulum_robust.toml"));
  Polynomial V = parse_polynomial(cert.v_text, *def.spec.space);
  double deltas[] = {1.25, 2.0, 3.0, 4.0, 5.0};
  for (double d : deltas) {
    double one[] = {d};
    ViolationReport vr = sample_certificate(def.spec, V, cert.epsilon,
                                            cert.region, 10000, 5, one);
    g.check(vr.pass(), "soundness sampling at delta = " + format_double(d));
  }
}

TEST_CASE("criterion 7: unstable negative control") {
  Gate g("criterion 7: negative control", 300.0);
  for (int deg : {2, 4, 6}) {
    fs::path cert_path = scratch() / ("unstable" + std::to_string(deg) + ".json");
    int rc = run_cli("certify " + bench("unstable.toml") + " --v-degree " +
                         std::to_string(deg) + " --seed 0 -o " +
                         cert_path.string(),
                     "unstable.log");
    g.check(rc == 2, "degree " + std::to_string(deg) +
                         " reports honest infeasibility (exit 2)");
    g.check(rc != 0, "never certifies");
  }
}

TEST_CASE("criterion 8: determinism of certificates") {
  Gate g("criterion 8: determinism", 1800.0);
  struct Rerun {
    const char* label;
    std::string args;
    const char* original;
  };
  Rerun reruns[] = {
      {"duffing",
       "certify " + bench("duffing.toml") +
           " --global --v-degree 4 --mult-degree 2 --seed 0 -o ",
       "duffing.cert.json"},
      {"threestate",
       "certify " + bench("threestate.toml") + " --max-shrink 0 --seed 0 -o ",
       "threestate.cert.json"},
      {"pendulum",
       "certify " + bench("pendulum.toml") + " --max-shrink 0 --seed 0 -o ",
       "pendulum.cert.json"},
      {"robust",
       "robust " + bench("pendulum_robust.toml") + " --max-shrink 0 --seed 0 -o ",
       "robust.cert.json"},
  };
  for (auto& r : reruns) {
    fs::path original = scratch() / r.original;
    REQUIRE_MESSAGE(fs::exists(original),
                    "criterion 8 needs the certificate produced earlier: ",
                    original.string());
    fs::path rerun = scratch() / (std::string(r.label) + ".rerun.json");
    int rc = run_cli(r.args + rerun.string(),
                     std::string(r.label) + "_rerun.log");
    g.check(rc == 0, std::string(r.label) + " rerun exits 0");
    g.check(same_bytes(original, rerun),
            std::string(r.label) + " rerun is byte-identical");
  }
}
