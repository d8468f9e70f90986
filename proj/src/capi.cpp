#include "nnsos.h"

#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "nnsos/certifier.hpp"
#include "nnsos/polyparse.hpp"
#include "nnsos/sdpa_io.hpp"
#include "nnsos/sha256.hpp"
#include "nnsos/simulator.hpp"
#include "nnsos/sysdef.hpp"

using namespace nnsos;

struct nnsos_problem {
  SystemDefinition def;
};

struct nnsos_result {
  StabilityResult res;
};

namespace {

thread_local std::string g_last_error;
thread_local std::string g_version_buf;

nnsos_status set_error(nnsos_status s, const std::string& msg) {
  g_last_error = msg;
  return s;
}

template <typename F>
nnsos_status guarded(F&& f) {
  try {
    return f();
  } catch (const Error& e) {
    std::string m = e.what();
    nnsos_status s = NNSOS_ERR_INVALID;
    if (m.find("hash mismatch") != std::string::npos) {
      s = NNSOS_ERR_MISMATCH;
    } else if (m.find("cannot open") != std::string::npos ||
               m.find("cannot write") != std::string::npos) {
      s = NNSOS_ERR_IO;
    } else if (m.find("parse") != std::string::npos ||
               m.find("missing") != std::string::npos ||
               m.find("JSON") != std::string::npos) {
      s = NNSOS_ERR_PARSE;
    }
    return set_error(s, m);
  } catch (const std::exception& e) {
    return set_error(NNSOS_ERR_UNKNOWN, e.what());
  }
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

// The certificate file does not store the whole problem, so results loaded
// from disk rebuild their StabilityResult skeleton from the certificate.
StabilityResult result_from_certificate(Certificate cert,
                                        const VariableSpace* space) {
  StabilityResult res;
  res.feasible = cert.feasible;
  res.status = cert.feasible ? SolveStatus::Feasible : SolveStatus::Stalled;
  res.final_region = cert.region;
  res.shrink_iterations = cert.shrink_iterations;
  if (space) {
    // Custom region polynomials parse against the problem's space later.
    (void)space;
  }
  res.certificate = std::move(cert);
  return res;
}

void require_hash_match(const SystemDefinition& def, const Certificate& cert) {
  if (cert.definition_sha256 != def.definition_sha256)
    throw Error("certificate/definition hash mismatch: certificate was "
                "produced from a different definition file");
  if (cert.network_sha256 != def.network_sha256)
    throw Error("certificate/network hash mismatch: weights changed since "
                "the certificate was produced");
}

}  // namespace

extern "C" {

const char* nnsos_version(void) {
  g_version_buf = tool_version();
  return g_version_buf.c_str();
}

const char* nnsos_last_error(void) { return g_last_error.c_str(); }

void nnsos_string_free(char* s) { std::free(s); }

nnsos_status nnsos_problem_load(const char* toml_path, nnsos_problem** out) {
  if (!toml_path || !out)
    return set_error(NNSOS_ERR_INVALID, "null argument");
  *out = nullptr;
  return guarded([&]() {
    auto p = std::make_unique<nnsos_problem>();
    p->def = load_system_definition(toml_path);
    *out = p.release();
    return NNSOS_OK;
  });
}

void nnsos_problem_free(nnsos_problem* p) { delete p; }

nnsos_status nnsos_problem_set_option(nnsos_problem* p, const char* key,
                                      const char* value) {
  if (!p || !key || !value)
    return set_error(NNSOS_ERR_INVALID, "null argument");
  return guarded([&]() {
    CertOptions& o = p->def.spec.opts;
    std::string k = key, v = value;
    auto as_int = [&]() { return std::stoi(v); };
    auto as_double = [&]() { return std::stod(v); };
    auto as_bool = [&]() {
      if (v == "true" || v == "1") return true;
      if (v == "false" || v == "0") return false;
      throw Error("boolean option '" + k + "' needs true/false");
    };
    if (k == "v_degree") {
      o.v_degree = as_int();
      if (o.v_degree < 2 || o.v_degree % 2)
        throw Error("v_degree must be an even integer >= 2");
    } else if (k == "mult_degree") {
      o.mult_degree = as_int();
    } else if (k == "eq_degree") {
      o.eq_degree = as_int();
    } else if (k == "roa_k") {
      o.roa_k = as_int();
      if (o.roa_k < 1) throw Error("roa_k must be >= 1");
    } else if (k == "epsilon") {
      o.epsilon = as_double();
      if (!(o.epsilon > 0)) throw Error("epsilon must be positive");
    } else if (k == "use_slope") {
      o.use_slope = as_bool();
    } else if (k == "all_pairs_slope") {
      o.all_pairs_slope = as_bool();
    } else if (k == "support") {
      if (v == "full") {
        o.support = MultiplierSupport::Full;
      } else if (v == "states") {
        o.support = MultiplierSupport::States;
      } else {
        throw Error("support must be full or states");
      }
    } else if (k == "shrink_factor") {
      o.shrink_factor = as_double();
      if (!(o.shrink_factor > 0 && o.shrink_factor < 1))
        throw Error("shrink_factor must lie in (0, 1)");
    } else if (k == "max_shrink") {
      o.max_shrink_iters = as_int();
    } else if (k == "seed") {
      o.seed = static_cast<std::uint64_t>(std::stoull(v));
    } else if (k == "shift_output_bias") {
      o.shift_output_bias = as_bool();
    } else if (k == "sim_step") {
      o.sim_step = as_double();
    } else if (k == "sim_horizon") {
      o.sim_horizon = as_double();
    } else if (k == "soundness_samples") {
      o.soundness_samples = as_int();
    } else if (k == "solver_max_iter") {
      o.solver.max_iter = as_int();
    } else {
      throw Error("unknown option '" + k + "'");
    }
    return NNSOS_OK;
  });
}

int nnsos_problem_state_count(const nnsos_problem* p) {
  return p ? static_cast<int>(p->def.spec.state_vars.size()) : 0;
}

int nnsos_problem_is_robust(const nnsos_problem* p) {
  return p && p->def.spec.robust() ? 1 : 0;
}

nnsos_status nnsos_certify(nnsos_problem* p, int global_mode,
                           nnsos_result** out) {
  if (!p || !out) return set_error(NNSOS_ERR_INVALID, "null argument");
  *out = nullptr;
  return guarded([&]() {
    auto r = std::make_unique<nnsos_result>();
    r->res = global_mode ? certify_global(p->def.spec)
                         : run_algorithm1(p->def.spec);
    r->res.certificate.definition_sha256 = p->def.definition_sha256;
    r->res.certificate.network_sha256 = p->def.network_sha256;
    *out = r.release();
    return NNSOS_OK;
  });
}

nnsos_status nnsos_roa(nnsos_problem* p, nnsos_result* r, double* gamma_out) {
  if (!p || !r) return set_error(NNSOS_ERR_INVALID, "null argument");
  return guarded([&]() {
    require_hash_match(p->def, r->res.certificate);
    if (!r->res.feasible)
      throw Error("cannot bound the ROA of an infeasible result");
    // A result loaded from disk has no parsed region polynomials yet.
    if (r->res.final_custom_region.empty() &&
        !r->res.certificate.custom_region.empty()) {
      for (auto& c : r->res.certificate.custom_region)
        r->res.final_custom_region.push_back(
            parse_polynomial(c, *p->def.spec.space));
    }
    std::string err;
    if (!roa_maximize(p->def.spec, r->res, &err)) throw Error(err);
    if (gamma_out) *gamma_out = r->res.certificate.gamma;
    return NNSOS_OK;
  });
}

nnsos_status nnsos_check_certificate(nnsos_problem* p, const nnsos_result* r,
                                     int nsamples, char** report_json) {
  if (!p || !r || !report_json)
    return set_error(NNSOS_ERR_INVALID, "null argument");
  *report_json = nullptr;
  return guarded([&]() {
    require_hash_match(p->def, r->res.certificate);
    CheckReport rep = check_certificate(p->def.spec, r->res.certificate, nsamples);
    nlohmann::ordered_json j;
    j["pass"] = rep.pass;
    j["max_identity_residual"] = rep.max_identity_residual;
    j["min_gram_eig"] = rep.min_gram_eig;
    j["soundness"] = {
        {"samples", rep.soundness.samples},
        {"positivity_violations", rep.soundness.positivity_violations},
        {"derivative_violations", rep.soundness.derivative_violations},
        {"worst_positivity_margin", rep.soundness.worst_positivity_margin},
        {"worst_derivative_margin", rep.soundness.worst_derivative_margin}};
    j["failures"] = rep.failures;
    *report_json = dup_string(j.dump(1));
    return NNSOS_OK;
  });
}

nnsos_status nnsos_dump_constraints(nnsos_problem* p, int global_mode,
                                    char** text) {
  if (!p || !text) return set_error(NNSOS_ERR_INVALID, "null argument");
  *text = nullptr;
  return guarded([&]() {
    *text = dup_string(dump_problem_constraints(p->def.spec, global_mode != 0));
    return NNSOS_OK;
  });
}

nnsos_status nnsos_export_sdpa(nnsos_problem* p, int global_mode,
                               const char* path) {
  if (!p || !path) return set_error(NNSOS_ERR_INVALID, "null argument");
  return guarded([&]() {
    SdpProblem sdp =
        lower_certification_sdp(p->def.spec, global_mode != 0);
    write_sdpa(sdp, path);
    return NNSOS_OK;
  });
}

int nnsos_result_feasible(const nnsos_result* r) {
  return r && r->res.feasible ? 1 : 0;
}

double nnsos_result_gamma(const nnsos_result* r) {
  return r ? r->res.certificate.gamma
           : std::numeric_limits<double>::quiet_NaN();
}

int nnsos_result_shrink_iterations(const nnsos_result* r) {
  return r ? r->res.shrink_iterations : -1;
}

const char* nnsos_result_status(const nnsos_result* r) {
  return r ? to_string(r->res.status) : "?";
}

const char* nnsos_result_message(const nnsos_result* r) {
  return r ? r->res.message.c_str() : "";
}

nnsos_status nnsos_result_save(const nnsos_result* r, const char* path) {
  if (!r || !path) return set_error(NNSOS_ERR_INVALID, "null argument");
  return guarded([&]() {
    std::ofstream out(path);
    if (!out) throw Error("cannot write certificate file: " + std::string(path));
    out << certificate_to_json(r->res.certificate) << "\n";
    return NNSOS_OK;
  });
}

nnsos_status nnsos_result_load(const char* path, nnsos_result** out) {
  if (!path || !out) return set_error(NNSOS_ERR_INVALID, "null argument");
  *out = nullptr;
  return guarded([&]() {
    std::ifstream in(path);
    if (!in) throw Error("cannot open certificate file: " + std::string(path));
    std::stringstream ss;
    ss << in.rdbuf();
    auto r = std::make_unique<nnsos_result>();
    r->res = result_from_certificate(certificate_from_json(ss.str()), nullptr);
    *out = r.release();
    return NNSOS_OK;
  });
}

void nnsos_result_free(nnsos_result* r) { delete r; }

namespace {

// NaN delta means "the nominal value": the interval midpoint for robust
// plants, irrelevant otherwise.
double resolve_delta(const ProblemSpec& spec, double delta) {
  if (!std::isnan(delta)) return delta;
  if (spec.delta_interval)
    return 0.5 * (spec.delta_interval->first + spec.delta_interval->second);
  return 0.0;
}

}  // namespace

nnsos_status nnsos_simulate(nnsos_problem* p, const double* x0, int n,
                            double delta, const char* csv_path,
                            int* converged) {
  if (!p || !x0) return set_error(NNSOS_ERR_INVALID, "null argument");
  return guarded([&]() {
    const ProblemSpec& spec = p->def.spec;
    delta = resolve_delta(spec, delta);
    if (n != static_cast<int>(spec.state_vars.size()))
      throw Error("initial state length does not match the state count");
    SimConfig cfg;
    cfg.step = spec.opts.sim_step;
    cfg.horizon = spec.opts.sim_horizon;
    Rhs rhs = make_closed_loop_rhs(spec, delta);
    Trajectory t = integrate(rhs, std::span<const double>(x0, x0 + n), cfg);
    if (csv_path) {
      std::vector<std::string> names;
      for (auto v : spec.state_vars) names.push_back(spec.space->name(v));
      write_trajectory_csv(csv_path, t, names);
    }
    if (converged) *converged = t.converged ? 1 : 0;
    return NNSOS_OK;
  });
}

nnsos_status nnsos_basin_grid(nnsos_problem* p, int per_dim, double delta,
                              const char* csv_path, int* diverging_count) {
  if (!p) return set_error(NNSOS_ERR_INVALID, "null argument");
  return guarded([&]() {
    const ProblemSpec& spec = p->def.spec;
    delta = resolve_delta(spec, delta);
    SimConfig cfg;
    cfg.step = spec.opts.sim_step;
    cfg.horizon = spec.opts.sim_horizon;
    Rhs rhs = make_closed_loop_rhs(spec, delta);
    auto pts = basin_sample_grid(rhs, spec.region, per_dim, cfg);
    if (csv_path) {
      std::vector<std::string> names;
      for (auto v : spec.state_vars) names.push_back(spec.space->name(v));
      write_basin_csv(csv_path, pts, names);
    }
    if (diverging_count) {
      int d = 0;
      for (auto& q : pts) d += q.converged ? 0 : 1;
      *diverging_count = d;
    }
    return NNSOS_OK;
  });
}

nnsos_status nnsos_roa_levelset_csv(nnsos_problem* p, const nnsos_result* r,
                                    int per_dim, const char* path) {
  if (!p || !r || !path) return set_error(NNSOS_ERR_INVALID, "null argument");
  return guarded([&]() {
    const Certificate& cert = r->res.certificate;
    if (!cert.has_gamma()) throw Error("result carries no level set yet");
    require_hash_match(p->def, cert);
    const ProblemSpec& spec = p->def.spec;
    Polynomial V = parse_polynomial(cert.v_text, *spec.space);
    std::ofstream out(path);
    if (!out) throw Error("cannot write level-set CSV: " + std::string(path));
    for (auto v : spec.state_vars) out << spec.space->name(v) << ",";
    out << "V,inside\n";
    const Box& box = cert.region;
    std::vector<int> idx(box.dim(), 0);
    Vec pt(spec.space->size(), 0.0);
    while (true) {
      Vec z(box.dim());
      for (int i = 0; i < box.dim(); ++i)
        z[i] = box.lower[i] +
               (box.upper[i] - box.lower[i]) * idx[i] / (per_dim - 1);
      for (int i = 0; i < box.dim(); ++i)
        pt[spec.state_vars[i].index] = z[i];
      double v = V.evaluate(pt);
      for (double zi : z) out << format_double(zi) << ",";
      out << format_double(v) << "," << (v <= cert.gamma ? 1 : 0) << "\n";
      int d = box.dim() - 1;
      while (d >= 0 && ++idx[d] == per_dim) idx[d--] = 0;
      if (d < 0) break;
    }
    return NNSOS_OK;
  });
}

}  // extern "C"
