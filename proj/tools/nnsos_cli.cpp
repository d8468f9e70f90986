// Command-line front end. Links the shared library through the C API only.
//
// Exit codes are a stable contract: 0 = certified / success, 2 = honest
// infeasibility, 1 = any error.

#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "nnsos.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitInfeasible = 2;

struct CommonFlags {
  int v_degree = 0;
  int mult_degree = -999;
  int eq_degree = -999;
  int roa_k = 0;
  double epsilon = 0.0;
  double shrink_factor = 0.0;
  int max_shrink = -1;
  bool all_pairs_slope = false;
  bool no_slope = false;
  bool shift_output_bias = false;
  std::string support;
  std::string solver = "embedded";
  unsigned long long seed = 0;
  bool seed_set = false;
  bool dump = false;
};

void add_common_flags(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--v-degree", f.v_degree, "Lyapunov candidate degree (even)");
  cmd->add_option("--mult-degree", f.mult_degree,
                  "inequality/region multiplier degree");
  cmd->add_option("--eq-degree", f.eq_degree, "equality multiplier degree");
  cmd->add_option("--k", f.roa_k, "ROA exponent k in |z|^{2k}");
  cmd->add_option("--epsilon", f.epsilon, "rho(z) = epsilon * sum z_i^2");
  cmd->add_option("--shrink-factor", f.shrink_factor,
                  "region contraction per infeasible iteration");
  cmd->add_option("--max-shrink", f.max_shrink, "shrink iteration budget");
  cmd->add_flag("--all-pairs-slope", f.all_pairs_slope,
                "slope constraints on every node pair (default intra-layer)");
  cmd->add_flag("--no-slope", f.no_slope, "disable slope constraints");
  cmd->add_flag("--shift-output-bias", f.shift_output_bias,
                "subtract pi(0) from the output bias before certifying");
  cmd->add_option("--support", f.support,
                  "multiplier variable support: full|states");
  cmd->add_option("--solver", f.solver,
                  "embedded | sdpa-export (write .dat-s and stop)")
      ->check(CLI::IsMember({"embedded", "sdpa-export"}));
  cmd->add_option("--seed", f.seed, "sampling seed")->each([&](std::string) {
    f.seed_set = true;
  });
  cmd->add_flag("--dump-constraints", f.dump,
                "print the constraint set before solving");
}

int fail(const char* what) {
  std::fprintf(stderr, "error: %s: %s\n", what, nnsos_last_error());
  return kExitError;
}

bool apply_option(nnsos_problem* p, const char* key, const std::string& v) {
  return nnsos_problem_set_option(p, key, v.c_str()) == NNSOS_OK;
}

int apply_common(nnsos_problem* p, const CommonFlags& f) {
  bool ok = true;
  if (f.v_degree) ok &= apply_option(p, "v_degree", std::to_string(f.v_degree));
  if (f.mult_degree != -999)
    ok &= apply_option(p, "mult_degree", std::to_string(f.mult_degree));
  if (f.eq_degree != -999)
    ok &= apply_option(p, "eq_degree", std::to_string(f.eq_degree));
  if (f.roa_k) ok &= apply_option(p, "roa_k", std::to_string(f.roa_k));
  if (f.epsilon > 0) ok &= apply_option(p, "epsilon", std::to_string(f.epsilon));
  if (f.shrink_factor > 0)
    ok &= apply_option(p, "shrink_factor", std::to_string(f.shrink_factor));
  if (f.max_shrink >= 0)
    ok &= apply_option(p, "max_shrink", std::to_string(f.max_shrink));
  if (f.all_pairs_slope) ok &= apply_option(p, "all_pairs_slope", "true");
  if (f.no_slope) ok &= apply_option(p, "use_slope", "false");
  if (f.shift_output_bias) ok &= apply_option(p, "shift_output_bias", "true");
  if (!f.support.empty()) ok &= apply_option(p, "support", f.support);
  if (f.seed_set) ok &= apply_option(p, "seed", std::to_string(f.seed));
  if (!ok) {
    std::fprintf(stderr, "error: bad option: %s\n", nnsos_last_error());
    return kExitError;
  }
  return kExitOk;
}

int run_certify(const std::string& def_path, bool global_mode,
                const CommonFlags& flags, const std::string& out_path) {
  nnsos_problem* p = nullptr;
  if (nnsos_problem_load(def_path.c_str(), &p) != NNSOS_OK)
    return fail("loading definition");
  int rc = apply_common(p, flags);
  if (rc != kExitOk) {
    nnsos_problem_free(p);
    return rc;
  }
  if (flags.dump) {
    char* text = nullptr;
    if (nnsos_dump_constraints(p, global_mode ? 1 : 0, &text) != NNSOS_OK) {
      nnsos_problem_free(p);
      return fail("dumping constraints");
    }
    std::fputs(text, stdout);
    nnsos_string_free(text);
  }
  if (flags.solver == "sdpa-export") {
    std::string path = out_path.empty() ? def_path + ".dat-s" : out_path;
    if (nnsos_export_sdpa(p, global_mode ? 1 : 0, path.c_str()) != NNSOS_OK) {
      nnsos_problem_free(p);
      return fail("exporting SDPA problem");
    }
    std::printf("wrote %s (no certificate produced; rerun with the embedded "
                "solver to certify)\n",
                path.c_str());
    nnsos_problem_free(p);
    return kExitOk;
  }
  nnsos_result* r = nullptr;
  if (nnsos_certify(p, global_mode ? 1 : 0, &r) != NNSOS_OK) {
    nnsos_problem_free(p);
    return fail("certification");
  }
  int feasible = nnsos_result_feasible(r);
  std::printf("status: %s\n", nnsos_result_status(r));
  if (feasible) {
    std::printf("certified (shrink iterations: %d)\n",
                nnsos_result_shrink_iterations(r));
  } else {
    std::printf("not certified: %s\n", nnsos_result_message(r));
  }
  std::string path = out_path.empty() ? def_path + ".cert.json" : out_path;
  if (nnsos_result_save(r, path.c_str()) != NNSOS_OK) {
    nnsos_result_free(r);
    nnsos_problem_free(p);
    return fail("writing certificate");
  }
  std::printf("certificate: %s\n", path.c_str());
  nnsos_result_free(r);
  nnsos_problem_free(p);
  return feasible ? kExitOk : kExitInfeasible;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Lyapunov certification and region-of-attraction estimation "
               "for neural-network feedback loops"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(nnsos_version()));

  // certify
  auto* certify = app.add_subcommand(
      "certify", "search for a Lyapunov certificate (local shrink loop)");
  std::string def_path, out_path;
  bool global_mode = false;
  CommonFlags certify_flags;
  certify->add_option("definition", def_path, "system definition (TOML)")
      ->required();
  certify->add_flag("--global", global_mode, "global program, no region");
  certify->add_option("-o,--output", out_path, "certificate output path");
  add_common_flags(certify, certify_flags);

  // robust
  auto* robust = app.add_subcommand(
      "robust", "parameterised certification over the uncertainty interval");
  std::string rdef_path, rout_path;
  CommonFlags robust_flags;
  robust->add_option("definition", rdef_path, "system definition (TOML)")
      ->required();
  robust->add_option("-o,--output", rout_path, "certificate output path");
  add_common_flags(robust, robust_flags);

  // roa
  auto* roa = app.add_subcommand(
      "roa", "maximize the certified level set of an existing certificate");
  std::string roa_cert, roa_def, roa_csv, roa_out;
  int roa_grid = 41;
  roa->add_option("certificate", roa_cert, "certificate JSON")->required();
  roa->add_option("definition", roa_def, "system definition (TOML)")->required();
  roa->add_option("--csv", roa_csv, "level-set sample CSV path");
  roa->add_option("--grid", roa_grid, "samples per axis for the CSV");
  roa->add_option("-o,--output", roa_out,
                  "updated certificate path (default: in place)");

  // simulate
  auto* sim = app.add_subcommand("simulate",
                                 "integrate the true closed loop (RK4)");
  std::string sim_def, sim_x0, sim_csv;
  int sim_grid = 0;
  double sim_delta = std::nan(""), sim_step = 0.0, sim_horizon = 0.0;
  sim->add_option("definition", sim_def, "system definition (TOML)")->required();
  sim->add_option("--x0", sim_x0, "comma-separated initial state");
  sim->add_option("--grid", sim_grid, "basin grid resolution per axis");
  sim->add_option("--delta", sim_delta,
                  "uncertainty value for robust plants (default: midpoint)");
  sim->add_option("--step", sim_step, "integration step (s)");
  sim->add_option("--horizon", sim_horizon, "integration horizon (s)");
  sim->add_option("-o,--output", sim_csv, "CSV output path");

  // check-cert
  auto* check = app.add_subcommand(
      "check-cert", "re-verify a certificate without the solver");
  std::string chk_cert, chk_def;
  int chk_n = 10000;
  check->add_option("certificate", chk_cert, "certificate JSON")->required();
  check->add_option("definition", chk_def, "system definition (TOML)")
      ->required();
  check->add_option("-n,--samples", chk_n,
                    "soundness sample count (0 = Gram check only)");

  // dump-constraints
  auto* dump = app.add_subcommand("dump-constraints",
                                  "print the semialgebraic constraint set");
  std::string dump_def;
  bool dump_global = false;
  dump->add_option("definition", dump_def, "system definition (TOML)")
      ->required();
  dump->add_flag("--global", dump_global, "global (region-free) constraints");

  CLI11_PARSE(app, argc, argv);

  if (certify->parsed())
    return run_certify(def_path, global_mode, certify_flags, out_path);

  if (robust->parsed()) {
    nnsos_problem* p = nullptr;
    if (nnsos_problem_load(rdef_path.c_str(), &p) != NNSOS_OK)
      return fail("loading definition");
    if (!nnsos_problem_is_robust(p)) {
      std::fprintf(stderr,
                   "error: definition has no [robustness] section; use "
                   "'certify' for nominal problems\n");
      nnsos_problem_free(p);
      return kExitError;
    }
    nnsos_problem_free(p);
    return run_certify(rdef_path, false, robust_flags, rout_path);
  }

  if (roa->parsed()) {
    nnsos_problem* p = nullptr;
    if (nnsos_problem_load(roa_def.c_str(), &p) != NNSOS_OK)
      return fail("loading definition");
    nnsos_result* r = nullptr;
    if (nnsos_result_load(roa_cert.c_str(), &r) != NNSOS_OK) {
      nnsos_problem_free(p);
      return fail("loading certificate");
    }
    double gamma = 0.0;
    if (nnsos_roa(p, r, &gamma) != NNSOS_OK) {
      nnsos_result_free(r);
      nnsos_problem_free(p);
      return fail("ROA maximization");
    }
    std::printf("gamma: %.12g\n", gamma);
    std::string csv = roa_csv.empty() ? roa_cert + ".levelset.csv" : roa_csv;
    if (nnsos_roa_levelset_csv(p, r, roa_grid, csv.c_str()) != NNSOS_OK) {
      nnsos_result_free(r);
      nnsos_problem_free(p);
      return fail("writing level-set CSV");
    }
    std::printf("level-set samples: %s\n", csv.c_str());
    std::string out = roa_out.empty() ? roa_cert : roa_out;
    if (nnsos_result_save(r, out.c_str()) != NNSOS_OK) {
      nnsos_result_free(r);
      nnsos_problem_free(p);
      return fail("writing updated certificate");
    }
    nnsos_result_free(r);
    nnsos_problem_free(p);
    return kExitOk;
  }

  if (sim->parsed()) {
    nnsos_problem* p = nullptr;
    if (nnsos_problem_load(sim_def.c_str(), &p) != NNSOS_OK)
      return fail("loading definition");
    if (sim_step > 0) apply_option(p, "sim_step", std::to_string(sim_step));
    if (sim_horizon > 0)
      apply_option(p, "sim_horizon", std::to_string(sim_horizon));
    if (sim_grid > 0) {
      std::string csv = sim_csv.empty() ? sim_def + ".basin.csv" : sim_csv;
      int diverging = 0;
      if (nnsos_basin_grid(p, sim_grid, sim_delta, csv.c_str(), &diverging) !=
          NNSOS_OK) {
        nnsos_problem_free(p);
        return fail("basin sampling");
      }
      std::printf("basin grid written to %s (%d non-converging points)\n",
                  csv.c_str(), diverging);
      nnsos_problem_free(p);
      return kExitOk;
    }
    if (sim_x0.empty()) {
      std::fprintf(stderr, "error: simulate needs --x0 or --grid\n");
      nnsos_problem_free(p);
      return kExitError;
    }
    std::vector<double> x0;
    std::string tok;
    for (char c : sim_x0 + ",") {
      if (c == ',') {
        if (!tok.empty()) x0.push_back(std::stod(tok));
        tok.clear();
      } else {
        tok.push_back(c);
      }
    }
    std::string csv = sim_csv.empty() ? sim_def + ".traj.csv" : sim_csv;
    int converged = 0;
    if (nnsos_simulate(p, x0.data(), static_cast<int>(x0.size()), sim_delta,
                       csv.c_str(), &converged) != NNSOS_OK) {
      nnsos_problem_free(p);
      return fail("simulation");
    }
    std::printf("trajectory written to %s (%s)\n", csv.c_str(),
                converged ? "converged" : "did not converge");
    nnsos_problem_free(p);
    return kExitOk;
  }

  if (check->parsed()) {
    nnsos_problem* p = nullptr;
    if (nnsos_problem_load(chk_def.c_str(), &p) != NNSOS_OK)
      return fail("loading definition");
    nnsos_result* r = nullptr;
    if (nnsos_result_load(chk_cert.c_str(), &r) != NNSOS_OK) {
      nnsos_problem_free(p);
      return fail("loading certificate");
    }
    char* report = nullptr;
    if (nnsos_check_certificate(p, r, chk_n, &report) != NNSOS_OK) {
      nnsos_result_free(r);
      nnsos_problem_free(p);
      return fail("certificate check");
    }
    std::fputs(report, stdout);
    std::fputs("\n", stdout);
    bool pass = std::string(report).find("\"pass\": true") != std::string::npos;
    nnsos_string_free(report);
    nnsos_result_free(r);
    nnsos_problem_free(p);
    return pass ? kExitOk : kExitError;
  }

  if (dump->parsed()) {
    nnsos_problem* p = nullptr;
    if (nnsos_problem_load(dump_def.c_str(), &p) != NNSOS_OK)
      return fail("loading definition");
    char* text = nullptr;
    if (nnsos_dump_constraints(p, dump_global ? 1 : 0, &text) != NNSOS_OK) {
      nnsos_problem_free(p);
      return fail("dumping constraints");
    }
    std::fputs(text, stdout);
    nnsos_string_free(text);
    nnsos_problem_free(p);
    return kExitOk;
  }

  return kExitError;
}
