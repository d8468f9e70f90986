#include "nnsos/certifier.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include <json.hpp>

#include "nnsos/polyparse.hpp"

namespace nnsos {

std::string tool_version() { return "nnsos 0.1.0"; }

namespace {

constexpr double kGlobalSampleHalfWidth = 3.0;  // soundness box for global runs

struct ReducedProblem {
  NetVars vars;
  SemialgebraicSet set;              // post-elimination
  std::vector<Polynomial> dynamics;  // inputs substituted and eliminated
  std::vector<VarId> sos_vars;       // X
  std::vector<VarId> support_vars;   // multiplier variable support
  std::vector<VarId> states;
  Box box;
  std::vector<Polynomial> customs;
  bool global = false;
};

int state_position(const ProblemSpec& spec, VarId v) {
  for (std::size_t i = 0; i < spec.state_vars.size(); ++i)
    if (spec.state_vars[i] == v) return static_cast<int>(i);
  throw Error("recast driver must be a state variable");
}

ReducedProblem build_reduced(const ProblemSpec& spec, const Box& box,
                             const std::vector<Polynomial>& customs,
                             bool global_mode) {
  spec.check();
  VariableSpace& sp = *spec.space;
  const NeuralNetwork& nn = *spec.nn;
  ReducedProblem red;
  red.states = spec.state_vars;
  red.box = box;
  red.customs = customs;
  red.global = global_mode;
  red.vars = NetVars::create(sp, nn, spec.input_vars);

  std::optional<IbpBounds> bounds;
  if (!global_mode) {
    box.check();
    if (!box.contains_origin_strictly())
      throw Error("region must contain the origin strictly");
    bounds = ibp(nn, box);
  }

  SemialgebraicSet S = affine_layer_equalities(nn, red.vars, spec.state_vars);
  const IbpBounds* bp = bounds ? &*bounds : nullptr;
  if (nn.activation() == Activation::ReLU) {
    S.append(relu_constraints(nn, bp, red.vars));
  } else {
    S.append(tanh_sector_constraints(nn, bp, red.vars));
  }
  if (spec.opts.use_slope)
    S.append(slope_constraints(nn, red.vars, spec.opts.all_pairs_slope));

  std::vector<Polynomial> dyn = spec.dynamics;
  std::vector<VarId> eliminable = red.vars.all_pre();
  for (auto u : red.vars.u) eliminable.push_back(u);

  std::vector<VarId> w_vars;
  if (std::isfinite(spec.u_max)) {
    if (global_mode)
      throw Error("input saturation needs a bounded region (IBP gates the encoding)");
    for (std::size_t i = 0; i < red.vars.u.size(); ++i) {
      VarId w = sp.intern("w" + std::to_string(i + 1));
      w_vars.push_back(w);
      S.append(saturation_constraints(red.vars.u[i], w, spec.u_max,
                                      bounds->output[i]));
      for (auto& f : dyn) f = f.substitute(red.vars.u[i], Polynomial::variable(w));
      eliminable.push_back(w);
    }
  }

  if (!global_mode) {
    S.append(region_constraints(box, spec.state_vars, sp));
    S.append(region_from_polynomials(customs));
    for (auto& rule : spec.aux_rules) {
      int pos = state_position(spec, rule.driver);
      double alpha = rule.sector_alpha(box.lower[pos], box.upper[pos]);
      S.inequalities.push_back(
          {recast_sector_constraint(rule.var, rule.driver, alpha),
           ConstraintTag::RecastSector,
           sp.name(rule.var) + " alpha=" + format_double(alpha)});
    }
  } else if (!spec.aux_rules.empty()) {
    throw Error("recast variables need a bounded region for their sector");
  }

  if (spec.robust()) {
    S.inequalities.push_back(
        {robustness_constraint(*spec.delta_var, spec.delta_interval->first,
                               spec.delta_interval->second),
         ConstraintTag::Robustness, sp.name(*spec.delta_var)});
  }

  Elimination elim;
  red.set = eliminate_affine_equalities(std::move(S), eliminable, &elim);
  for (auto& f : dyn) f = elim.apply(f);
  red.dynamics = std::move(dyn);

  // X = states, recast vars, delta, surviving saturation vars, activations.
  std::set<std::uint32_t> eliminated;
  for (auto& [v, e] : elim.subs) eliminated.insert(v.index);
  std::set<std::uint32_t> xs;
  for (auto v : spec.state_vars) xs.insert(v.index);
  for (auto& r : spec.aux_rules) xs.insert(r.var.index);
  if (spec.delta_var) xs.insert(spec.delta_var->index);
  std::set<std::uint32_t> support = xs;
  for (auto w : w_vars)
    if (!eliminated.contains(w.index)) {
      xs.insert(w.index);
      support.insert(w.index);
    }
  for (auto phi : red.vars.all_post()) xs.insert(phi.index);
  for (auto i : xs) red.sos_vars.push_back(VarId{i});
  if (spec.opts.support == MultiplierSupport::Full) {
    red.support_vars = red.sos_vars;
  } else {
    for (auto i : support) red.support_vars.push_back(VarId{i});
  }
  return red;
}

Polynomial rho_polynomial(std::span<const VarId> states, double epsilon) {
  Polynomial rho;
  for (auto z : states) rho += Polynomial::term(epsilon, Monomial::var(z, 2));
  return rho;
}

Polynomial znorm_power(std::span<const VarId> states, int k) {
  Polynomial n2;
  for (auto z : states) n2 += Polynomial::term(1.0, Monomial::var(z, 2));
  Polynomial out(1.0);
  for (int i = 0; i < k; ++i) out = out * n2;
  return out;
}

struct BuiltProgram {
  SosProgram prog;
  LinPoly V;
  std::vector<Monomial> v_basis;
  Polynomial rho;
  int c_vpos = -1;
  int c_deriv = -1;
  struct MultInfo {
    std::string name, cls, tag, label;
    bool sos;
  };
  std::vector<MultInfo> mults;
};

BuiltProgram build_program(const ProblemSpec& spec, const ReducedProblem& red) {
  BuiltProgram bp;
  const CertOptions& o = spec.opts;
  bp.v_basis = monomials_up_to(red.states, o.v_degree, 2);
  bp.V = bp.prog.new_free_poly(bp.v_basis, "V");
  bp.rho = rho_polynomial(red.states, o.epsilon);
  LinPoly vpos = bp.V;
  vpos -= LinPoly::from(bp.rho);
  bp.c_vpos = bp.prog.add_sos_constraint(vpos, "V-rho");

  LinPoly E;
  for (std::size_t i = 0; i < red.states.size(); ++i) {
    LinPoly dv = bp.V.differentiate(red.states[i]);
    LinPoly term = dv * red.dynamics[i];
    term *= -1.0;
    E += term;
  }

  int mult_deg = o.effective_mult_degree();
  int eq_deg = o.effective_eq_degree();
  auto mult_gram_basis = monomials_up_to(red.support_vars, mult_deg / 2);
  auto eq_basis = monomials_up_to(red.support_vars, eq_deg);

  int si = 0;
  for (auto& g : red.set.inequalities) {
    std::string name = "s_" + std::to_string(++si);
    LinPoly s = bp.prog.new_sos_poly(mult_gram_basis, name);
    E -= s * g.p;
    bp.mults.push_back({name, "ineq", to_string(g.tag), g.label, true});
  }
  int ti = 0;
  for (auto& h : red.set.equalities) {
    std::string name = "t_" + std::to_string(++ti);
    LinPoly t = bp.prog.new_free_poly(eq_basis, name);
    E -= t * h.p;
    bp.mults.push_back({name, "eq", to_string(h.tag), h.label, false});
  }
  int pi = 0;
  for (auto& d : red.set.region) {
    std::string name = "p_" + std::to_string(++pi);
    LinPoly p = bp.prog.new_sos_poly(mult_gram_basis, name);
    E -= p * d.p;
    bp.mults.push_back({name, "region", to_string(d.tag), d.label, true});
  }
  bp.c_deriv = bp.prog.add_sos_constraint(E, "derivative");
  return bp;
}

std::string monomial_text(const Monomial& m, const VariableSpace& sp) {
  return print_polynomial(Polynomial::term(1.0, m), sp);
}

GramData gram_data(std::span<const Monomial> basis, const Mat& q,
                   const VariableSpace& sp, double scale) {
  GramData g;
  for (auto& m : basis) g.basis.push_back(monomial_text(m, sp));
  g.q = q;
  for (auto& v : g.q.a) v *= scale;
  return g;
}

std::vector<double> robust_delta_samples(const ProblemSpec& spec) {
  if (!spec.robust()) return {};
  double lo = spec.delta_interval->first, hi = spec.delta_interval->second;
  return {lo, 0.5 * (lo + hi), hi};
}

ProblemSpec resolve_equilibrium(const ProblemSpec& spec_in, bool* shifted) {
  ProblemSpec spec = spec_in;
  spec.check();
  *shifted = false;
  auto rep = check_equilibrium(*spec.nn, spec.dynamics, spec.state_vars,
                               spec.input_vars, spec.space->size(),
                               spec.opts.equilibrium_tol);
  if (!rep.pass) {
    if (!spec.opts.shift_output_bias)
      throw Error("equilibrium check failed: |f(0, pi(0))| = " +
                  format_double(rep.residual) +
                  " exceeds tolerance; rerun with --shift-output-bias to "
                  "subtract pi(0) from the output layer");
    spec.nn = std::make_shared<NeuralNetwork>(spec.nn->with_shifted_output_bias());
    *shifted = true;
    auto rep2 = check_equilibrium(*spec.nn, spec.dynamics, spec.state_vars,
                                  spec.input_vars, spec.space->size(),
                                  spec.opts.equilibrium_tol);
    if (!rep2.pass)
      throw Error("equilibrium residual persists after bias shift: " +
                  format_double(rep2.residual));
  }
  return spec;
}

Box soundness_box(const ProblemSpec& spec, const ReducedProblem& red) {
  if (!red.global) return red.box;
  Box b;
  b.lower.assign(spec.state_vars.size(), -kGlobalSampleHalfWidth);
  b.upper.assign(spec.state_vars.size(), kGlobalSampleHalfWidth);
  return b;
}

StabilityResult certify_at(const ProblemSpec& spec_shifted, bool shifted,
                           const Box& box,
                           const std::vector<Polynomial>& customs,
                           bool global_mode, const std::string& mode_name) {
  const ProblemSpec& spec = spec_shifted;
  ReducedProblem red = build_reduced(spec, box, customs, global_mode);
  BuiltProgram bp = build_program(spec, red);
  SdpProblem sdp = bp.prog.lower();
  ConicSolution sol = solve_sdp(sdp, spec.opts.solver);

  StabilityResult res;
  res.status = sol.status;
  res.final_region = red.box;
  res.final_custom_region = red.customs;
  if (sol.status != SolveStatus::Optimal && sol.status != SolveStatus::Feasible) {
    res.message = std::string("solver: ") + to_string(sol.status) +
                  (sol.message.empty() ? "" : " (" + sol.message + ")");
    return res;
  }
  SosSolution sos =
      bp.prog.reconstruct(sol, spec.opts.psd_tol, spec.opts.recon_tol);
  if (!sos.accepted) {
    res.message = "certificate rejected: " + sos.reject_reason;
    return res;
  }

  // Scale-normalize: quadratic trace of V equals the state count, so level
  // sets are comparable across degrees and reruns. All multipliers, Grams and
  // epsilon scale together, preserving every identity.
  Polynomial V = sos.polynomials.at("V");
  double trace = 0.0;
  for (auto z : red.states) trace += V.coefficient(Monomial::var(z, 2));
  double scale = 1.0;
  if (trace > 1e-12) scale = static_cast<double>(red.states.size()) / trace;
  V = V * scale;
  double eps_eff = spec.opts.epsilon * scale;

  ViolationReport vr = sample_certificate(
      spec, V, eps_eff, soundness_box(spec, red), spec.opts.soundness_samples,
      spec.opts.seed, robust_delta_samples(spec));

  Certificate& cert = res.certificate;
  cert.tool_version = tool_version();
  cert.mode = mode_name;
  cert.seed = spec.opts.seed;
  cert.v_degree = spec.opts.v_degree;
  cert.mult_degree = spec.opts.effective_mult_degree();
  cert.eq_degree = spec.opts.effective_eq_degree();
  cert.roa_k = spec.opts.roa_k;
  cert.epsilon = eps_eff;
  cert.use_slope = spec.opts.use_slope;
  cert.all_pairs_slope = spec.opts.all_pairs_slope;
  cert.support =
      spec.opts.support == MultiplierSupport::Full ? "full" : "states";
  cert.region = red.box;
  for (auto& c : red.customs)
    cert.custom_region.push_back(print_polynomial(c, *spec.space));
  cert.v_text = print_polynomial(V, *spec.space);
  cert.v_gram = gram_data(bp.prog.constraint_basis(bp.c_vpos),
                          sos.gram.at("V-rho"), *spec.space, scale);
  cert.derivative_gram = gram_data(bp.prog.constraint_basis(bp.c_deriv),
                                   sos.gram.at("derivative"), *spec.space, scale);
  for (auto& mi : bp.mults) {
    MultiplierData md;
    md.name = mi.name;
    md.cls = mi.cls;
    md.tag = mi.tag;
    md.label = mi.label;
    Polynomial p = sos.polynomials.at(mi.name) * scale;
    md.poly = print_polynomial(p, *spec.space);
    if (mi.sos) {
      // The multiplier's own Gram carries its SOS witness.
      auto it = sos.gram.find(mi.name);
      if (it != sos.gram.end()) {
        // Bases of multiplier Grams: reconstruct from the program's named
        // polynomial (same basis the certifier used).
        GramData g;
        g.q = it->second;
        for (auto& v : g.q.a) v *= scale;
        md.gram = std::move(g);
      }
    }
    cert.multipliers.push_back(std::move(md));
  }
  // Multiplier Gram bases are shared: record once on each entry.
  {
    int mult_deg = spec.opts.effective_mult_degree();
    auto basis = monomials_up_to(red.support_vars, mult_deg / 2);
    std::vector<std::string> btext;
    for (auto& m : basis) btext.push_back(monomial_text(m, *spec.space));
    for (auto& md : cert.multipliers)
      if (md.gram) md.gram->basis = btext;
  }
  cert.solve_status = to_string(sol.status);
  cert.iterations = sol.iterations;
  cert.res_primal = sol.res_primal;
  cert.res_dual = sol.res_dual;
  cert.res_gap = sol.res_gap;
  cert.min_gram_eig = sos.min_gram_eig * scale;
  cert.recon_residual = sos.max_recon_residual * scale;
  cert.soundness = vr;
  cert.output_bias_shifted = shifted;

  if (!vr.pass()) {
    res.message = "soundness sampling voided the certificate: " +
                  std::to_string(vr.positivity_violations) + " positivity / " +
                  std::to_string(vr.derivative_violations) +
                  " derivative violations";
    res.feasible = false;
    cert.feasible = false;
    return res;
  }
  cert.feasible = true;
  res.feasible = true;
  return res;
}

}  // namespace

StabilityResult certify_global(const ProblemSpec& spec_in) {
  bool shifted = false;
  ProblemSpec spec = resolve_equilibrium(spec_in, &shifted);
  return certify_at(spec, shifted, spec.region, spec.custom_region, true,
                    spec.robust() ? "robust" : "global");
}

StabilityResult certify_local(const ProblemSpec& spec_in) {
  bool shifted = false;
  ProblemSpec spec = resolve_equilibrium(spec_in, &shifted);
  return certify_at(spec, shifted, spec.region, spec.custom_region, false,
                    spec.robust() ? "robust" : "local");
}

StabilityResult certify_robust(const ProblemSpec& spec) {
  if (!spec.robust())
    throw Error("robust certification needs an uncertainty interval");
  return certify_local(spec);
}

StabilityResult run_algorithm1(const ProblemSpec& spec_in) {
  bool shifted = false;
  ProblemSpec spec = resolve_equilibrium(spec_in, &shifted);
  Box box = spec.region;
  std::vector<Polynomial> customs = spec.custom_region;
  std::vector<std::string> log;
  StabilityResult last;
  for (int iter = 0; iter <= spec.opts.max_shrink_iters; ++iter) {
    StabilityResult res =
        certify_at(spec, shifted, box, customs, false,
                   spec.robust() ? "robust" : "local");
    std::string line = "iteration " + std::to_string(iter) + ": box [" +
                       format_double(box.lower[0]) + ", " +
                       format_double(box.upper[0]) + "]... " +
                       (res.feasible ? "feasible" : res.message);
    log.push_back(line);
    if (res.feasible) {
      res.shrink_iterations = iter;
      res.certificate.shrink_iterations = iter;
      res.iteration_log = log;
      return res;
    }
    last = std::move(res);
    box = box.shrunk(spec.opts.shrink_factor);
    double inv = 1.0 / spec.opts.shrink_factor;
    for (auto& c : customs) c = c.scale_vars(spec.state_vars, inv);
  }
  last.shrink_iterations = spec.opts.max_shrink_iters + 1;
  last.iteration_log = log;
  last.message = "region shrink budget exhausted; " + last.message;
  return last;
}

bool roa_maximize(const ProblemSpec& spec, StabilityResult& result,
                  std::string* error) {
  auto fail = [&](const std::string& msg) {
    if (error) *error = msg;
    return false;
  };
  if (!result.feasible) return fail("no feasible certificate to bound");
  VariableSpace& sp = *spec.space;
  Polynomial V = parse_polynomial(result.certificate.v_text, sp);
  std::vector<std::pair<Polynomial, std::string>> region_polys;
  const Box& box = result.final_region;
  for (std::size_t i = 0; i < spec.state_vars.size(); ++i) {
    Polynomial z = Polynomial::variable(spec.state_vars[i]);
    region_polys.emplace_back(z - Polynomial(box.lower[i]),
                              sp.name(spec.state_vars[i]) + " lower");
    region_polys.emplace_back(Polynomial(box.upper[i]) - z,
                              sp.name(spec.state_vars[i]) + " upper");
  }
  for (std::size_t i = 0; i < result.final_custom_region.size(); ++i)
    region_polys.emplace_back(result.final_custom_region[i],
                              "custom " + std::to_string(i + 1));

  int k = spec.opts.roa_k;
  Polynomial znk = znorm_power(spec.state_vars, k);
  SosProgram prog;
  ColId gamma = prog.new_free_var("gamma");
  int v_deg = static_cast<int>(V.degree());
  std::vector<std::string> pnames;
  for (std::size_t di = 0; di < region_polys.size(); ++di) {
    const Polynomial& d = region_polys[di].first;
    int deg_p = 2 * k + v_deg - static_cast<int>(d.degree());
    if (deg_p < 0) deg_p = 0;
    deg_p -= deg_p % 2;  // even cap keeps the expression degree even
    std::string pname = "roa_p_" + std::to_string(di + 1);
    pnames.push_back(pname);
    LinPoly p = prog.new_sos_poly(
        monomials_up_to(spec.state_vars, deg_p / 2), pname);
    LinPoly expr = LinPoly::from(znk * V);
    for (auto& [m, c] : znk.terms())
      expr.add_term(m, AffExpr::col(gamma, -c));
    expr += p * d;
    prog.add_sos_constraint(expr, "roa_c_" + std::to_string(di + 1));
  }
  prog.maximize(AffExpr::col(gamma));
  ConicSolution sol = solve_sdp(prog.lower(), spec.opts.solver);
  if (sol.status != SolveStatus::Optimal)
    return fail(std::string("ROA solve: ") + to_string(sol.status));
  SosSolution sos = prog.reconstruct(sol, spec.opts.psd_tol, spec.opts.recon_tol);
  if (!sos.accepted) return fail("ROA reconstruction rejected: " + sos.reject_reason);
  double g = sol.free_vars[0];
  if (!(g > 0)) return fail("degenerate level set: gamma = " + format_double(g));

  Certificate& cert = result.certificate;
  cert.gamma = g;
  cert.roa_k = k;
  cert.roa_multipliers.clear();
  cert.roa_grams.clear();
  for (std::size_t di = 0; di < region_polys.size(); ++di) {
    MultiplierData md;
    md.name = pnames[di];
    md.cls = "roa";
    md.tag = "region";
    md.label = region_polys[di].second;
    md.poly = print_polynomial(sos.polynomials.at(pnames[di]), sp);
    GramData gd;
    gd.q = sos.gram.at(pnames[di]);
    int deg_p = 2 * k + v_deg - static_cast<int>(region_polys[di].first.degree());
    if (deg_p < 0) deg_p = 0;
    deg_p -= deg_p % 2;
    for (auto& m : monomials_up_to(spec.state_vars, deg_p / 2))
      gd.basis.push_back(monomial_text(m, sp));
    md.gram = std::move(gd);
    cert.roa_multipliers.push_back(std::move(md));

    GramData cg;
    cg.q = sos.gram.at("roa_c_" + std::to_string(di + 1));
    for (auto& m : prog.constraint_basis(static_cast<int>(di)))
      cg.basis.push_back(monomial_text(m, sp));
    cert.roa_grams.push_back(std::move(cg));
  }
  return true;
}

RoaTrajectoryReport roa_trajectories_converge(const ProblemSpec& spec,
                                              const StabilityResult& result,
                                              int n, std::uint64_t seed,
                                              double delta_value) {
  RoaTrajectoryReport rep;
  if (!result.feasible || !result.certificate.has_gamma()) return rep;
  Polynomial V = parse_polynomial(result.certificate.v_text, *spec.space);
  double gamma = result.certificate.gamma;
  const Box& box = result.final_region;
  Rhs rhs = make_closed_loop_rhs(spec, delta_value);
  SimConfig cfg;
  cfg.step = spec.opts.sim_step;
  cfg.horizon = spec.opts.sim_horizon;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  Vec pt(spec.space->size(), 0.0);
  int guard = 0;
  while (rep.attempted < n && guard < n * 1000) {
    ++guard;
    Vec z(box.dim());
    for (int i = 0; i < box.dim(); ++i)
      z[i] = box.lower[i] + u01(rng) * (box.upper[i] - box.lower[i]);
    for (std::size_t i = 0; i < z.size(); ++i)
      pt[spec.state_vars[i].index] = z[i];
    if (V.evaluate(pt) > gamma) continue;
    ++rep.attempted;
    Trajectory t = integrate(rhs, z, cfg);
    if (t.converged) ++rep.converged;
  }
  return rep;
}

std::string dump_problem_constraints(const ProblemSpec& spec_in,
                                     bool global_mode) {
  bool shifted = false;
  ProblemSpec spec = resolve_equilibrium(spec_in, &shifted);
  ReducedProblem red =
      build_reduced(spec, spec.region, spec.custom_region, global_mode);
  return dump_constraints(red.set, *spec.space);
}

SdpProblem lower_certification_sdp(const ProblemSpec& spec_in,
                                   bool global_mode) {
  bool shifted = false;
  ProblemSpec spec = resolve_equilibrium(spec_in, &shifted);
  ReducedProblem red =
      build_reduced(spec, spec.region, spec.custom_region, global_mode);
  BuiltProgram bp = build_program(spec, red);
  return bp.prog.lower();
}

namespace {

Polynomial expand_gram(const GramData& g, VariableSpace& sp) {
  std::vector<Monomial> basis;
  for (auto& t : g.basis) {
    Polynomial p = parse_polynomial(t, sp);
    if (p.term_count() != 1)
      throw Error("bad gram basis monomial: " + t);
    basis.push_back(p.terms().begin()->first);
  }
  int d = static_cast<int>(basis.size());
  if (g.q.rows != d) throw Error("gram matrix does not match basis size");
  Polynomial out;
  for (int i = 0; i < d; ++i)
    for (int j = i; j < d; ++j)
      out.add_term((i == j ? 1.0 : 2.0) * g.q.at(i, j), basis[i].times(basis[j]));
  out.canonicalize();
  return out;
}

double max_abs_coeff(const Polynomial& p) {
  double worst = 0.0;
  for (auto& [m, c] : p.terms()) worst = std::max(worst, std::abs(c));
  return worst;
}

}  // namespace

CheckReport check_certificate(const ProblemSpec& spec_in,
                              const Certificate& cert, int nsamples) {
  CheckReport rep;
  rep.min_gram_eig = std::numeric_limits<double>::infinity();
  ProblemSpec spec = spec_in;
  spec.opts.v_degree = cert.v_degree;
  spec.opts.mult_degree = cert.mult_degree;
  spec.opts.eq_degree = cert.eq_degree;
  spec.opts.use_slope = cert.use_slope;
  spec.opts.all_pairs_slope = cert.all_pairs_slope;
  spec.opts.support = cert.support == "full" ? MultiplierSupport::Full
                                             : MultiplierSupport::States;
  spec.opts.roa_k = cert.roa_k;
  if (cert.output_bias_shifted)
    spec.nn = std::make_shared<NeuralNetwork>(spec.nn->with_shifted_output_bias());

  VariableSpace& sp = *spec.space;
  std::vector<Polynomial> customs;
  for (auto& c : cert.custom_region) customs.push_back(parse_polynomial(c, sp));
  ReducedProblem red =
      build_reduced(spec, cert.region, customs, cert.mode == "global");

  auto fail = [&](const std::string& msg) { rep.failures.push_back(msg); };

  Polynomial V = parse_polynomial(cert.v_text, sp);
  Polynomial rho = rho_polynomial(red.states, cert.epsilon);

  // V - rho identity.
  Polynomial vg = expand_gram(cert.v_gram, sp);
  rep.max_identity_residual =
      std::max(rep.max_identity_residual, max_abs_coeff(V - rho - vg));
  rep.min_gram_eig = std::min(rep.min_gram_eig, sym_min_eig(cert.v_gram.q));

  // Derivative identity with stored multipliers, matched by construction order.
  std::size_t mi = 0;
  Polynomial E;
  for (std::size_t i = 0; i < red.states.size(); ++i)
    E -= V.differentiate(red.states[i]) * red.dynamics[i];
  auto consume = [&](const TaggedPoly& c, const char* cls) -> bool {
    if (mi >= cert.multipliers.size()) {
      fail("certificate has too few multipliers");
      return false;
    }
    const MultiplierData& md = cert.multipliers[mi++];
    if (md.cls != cls) {
      fail("multiplier class mismatch at " + md.name);
      return false;
    }
    Polynomial mp = parse_polynomial(md.poly, sp);
    E -= mp * c.p;
    if (md.gram) {
      Polynomial mg = expand_gram(*md.gram, sp);
      rep.max_identity_residual =
          std::max(rep.max_identity_residual, max_abs_coeff(mp - mg));
      rep.min_gram_eig = std::min(rep.min_gram_eig, sym_min_eig(md.gram->q));
    }
    return true;
  };
  for (auto& g : red.set.inequalities)
    if (!consume(g, "ineq")) break;
  for (auto& h : red.set.equalities)
    if (!consume(h, "eq")) break;
  for (auto& d : red.set.region)
    if (!consume(d, "region")) break;
  if (mi != cert.multipliers.size())
    fail("certificate multiplier count does not match the constraint set");

  Polynomial eg = expand_gram(cert.derivative_gram, sp);
  rep.max_identity_residual =
      std::max(rep.max_identity_residual, max_abs_coeff(E - eg));
  rep.min_gram_eig =
      std::min(rep.min_gram_eig, sym_min_eig(cert.derivative_gram.q));

  if (cert.has_gamma()) {
    Polynomial znk = znorm_power(red.states, cert.roa_k);
    std::vector<std::pair<Polynomial, std::string>> region_polys;
    for (std::size_t i = 0; i < red.states.size(); ++i) {
      Polynomial z = Polynomial::variable(red.states[i]);
      region_polys.emplace_back(z - Polynomial(cert.region.lower[i]), "");
      region_polys.emplace_back(Polynomial(cert.region.upper[i]) - z, "");
    }
    for (auto& c : customs) region_polys.emplace_back(c, "");
    if (cert.roa_multipliers.size() != region_polys.size() ||
        cert.roa_grams.size() != region_polys.size()) {
      fail("ROA multiplier count mismatch");
    } else {
      for (std::size_t di = 0; di < region_polys.size(); ++di) {
        Polynomial p = parse_polynomial(cert.roa_multipliers[di].poly, sp);
        Polynomial expr =
            znk * (V - Polynomial(cert.gamma)) + p * region_polys[di].first;
        Polynomial rg = expand_gram(cert.roa_grams[di], sp);
        rep.max_identity_residual =
            std::max(rep.max_identity_residual, max_abs_coeff(expr - rg));
        rep.min_gram_eig =
            std::min(rep.min_gram_eig, sym_min_eig(cert.roa_grams[di].q));
        if (cert.roa_multipliers[di].gram) {
          Polynomial pg = expand_gram(*cert.roa_multipliers[di].gram, sp);
          rep.max_identity_residual =
              std::max(rep.max_identity_residual, max_abs_coeff(p - pg));
          rep.min_gram_eig = std::min(
              rep.min_gram_eig, sym_min_eig(cert.roa_multipliers[di].gram->q));
        }
      }
    }
  }

  if (nsamples > 0) {
    Box sbox = red.box;
    if (cert.mode == "global") {
      sbox.lower.assign(red.states.size(), -kGlobalSampleHalfWidth);
      sbox.upper.assign(red.states.size(), kGlobalSampleHalfWidth);
    }
    rep.soundness = sample_certificate(spec, V, cert.epsilon, sbox, nsamples,
                                       cert.seed, robust_delta_samples(spec));
    if (!rep.soundness.pass()) fail("soundness sampling reported violations");
  } else {
    rep.soundness.samples = 0;
  }

  double tol = std::max(spec.opts.recon_tol, 10 * cert.recon_residual + 1e-9);
  if (rep.max_identity_residual > tol)
    fail("algebraic identity residual " +
         format_double(rep.max_identity_residual) + " exceeds " +
         format_double(tol));
  if (rep.min_gram_eig < -spec.opts.psd_tol)
    fail("a Gram block is not PSD within tolerance");
  rep.pass = rep.failures.empty();
  return rep;
}

// ---------------------------------------------------------------------------
// JSON serialization.

namespace {

using Json = nlohmann::ordered_json;

Json mat_json(const Mat& m) {
  Json rows = Json::array();
  for (int i = 0; i < m.rows; ++i) {
    Json row = Json::array();
    for (int j = 0; j < m.cols; ++j) row.push_back(m.at(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Mat mat_from_json(const Json& j) {
  int rows = static_cast<int>(j.size());
  int cols = rows ? static_cast<int>(j[0].size()) : 0;
  Mat m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int c = 0; c < cols; ++c) m.at(i, c) = j[i][c].get<double>();
  return m;
}

Json gram_json(const GramData& g) {
  Json j;
  j["basis"] = g.basis;
  j["q"] = mat_json(g.q);
  return j;
}

GramData gram_from_json(const Json& j) {
  GramData g;
  g.basis = j.at("basis").get<std::vector<std::string>>();
  g.q = mat_from_json(j.at("q"));
  return g;
}

Json mult_json(const MultiplierData& m) {
  Json j;
  j["name"] = m.name;
  j["class"] = m.cls;
  j["tag"] = m.tag;
  j["label"] = m.label;
  j["poly"] = m.poly;
  if (m.gram) j["gram"] = gram_json(*m.gram);
  return j;
}

MultiplierData mult_from_json(const Json& j) {
  MultiplierData m;
  m.name = j.at("name").get<std::string>();
  m.cls = j.at("class").get<std::string>();
  m.tag = j.at("tag").get<std::string>();
  m.label = j.at("label").get<std::string>();
  m.poly = j.at("poly").get<std::string>();
  if (j.contains("gram")) m.gram = gram_from_json(j.at("gram"));
  return m;
}

}  // namespace

std::string certificate_to_json(const Certificate& cert) {
  Json j;
  j["tool"] = cert.tool_version;
  j["mode"] = cert.mode;
  j["feasible"] = cert.feasible;
  j["seed"] = cert.seed;
  j["inputs"] = {{"definition_sha256", cert.definition_sha256},
                 {"network_sha256", cert.network_sha256}};
  j["options"] = {{"v_degree", cert.v_degree},
                  {"mult_degree", cert.mult_degree},
                  {"eq_degree", cert.eq_degree},
                  {"roa_k", cert.roa_k},
                  {"epsilon", cert.epsilon},
                  {"use_slope", cert.use_slope},
                  {"all_pairs_slope", cert.all_pairs_slope},
                  {"support", cert.support},
                  {"output_bias_shifted", cert.output_bias_shifted}};
  j["region"] = {{"lower", cert.region.lower},
                 {"upper", cert.region.upper},
                 {"custom", cert.custom_region}};
  j["shrink_iterations"] = cert.shrink_iterations;
  j["v"] = cert.v_text;
  j["v_gram"] = gram_json(cert.v_gram);
  j["derivative_gram"] = gram_json(cert.derivative_gram);
  Json mults = Json::array();
  for (auto& m : cert.multipliers) mults.push_back(mult_json(m));
  j["multipliers"] = std::move(mults);
  if (cert.has_gamma()) {
    j["gamma"] = cert.gamma;
    Json rm = Json::array();
    for (auto& m : cert.roa_multipliers) rm.push_back(mult_json(m));
    j["roa_multipliers"] = std::move(rm);
    Json rg = Json::array();
    for (auto& g : cert.roa_grams) rg.push_back(gram_json(g));
    j["roa_grams"] = std::move(rg);
  }
  j["solver"] = {{"status", cert.solve_status},
                 {"iterations", cert.iterations},
                 {"res_primal", cert.res_primal},
                 {"res_dual", cert.res_dual},
                 {"res_gap", cert.res_gap},
                 {"min_gram_eig", cert.min_gram_eig},
                 {"recon_residual", cert.recon_residual}};
  j["soundness"] = {
      {"samples", cert.soundness.samples},
      {"positivity_violations", cert.soundness.positivity_violations},
      {"derivative_violations", cert.soundness.derivative_violations},
      {"worst_positivity_margin", cert.soundness.worst_positivity_margin},
      {"worst_derivative_margin", cert.soundness.worst_derivative_margin}};
  return j.dump(1);
}

Certificate certificate_from_json(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const std::exception& e) {
    throw Error(std::string("certificate JSON parse error: ") + e.what());
  }
  Certificate c;
  try {
    c.tool_version = j.at("tool").get<std::string>();
    c.mode = j.at("mode").get<std::string>();
    c.feasible = j.at("feasible").get<bool>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.definition_sha256 = j.at("inputs").at("definition_sha256").get<std::string>();
    c.network_sha256 = j.at("inputs").at("network_sha256").get<std::string>();
    const Json& o = j.at("options");
    c.v_degree = o.at("v_degree").get<int>();
    c.mult_degree = o.at("mult_degree").get<int>();
    c.eq_degree = o.at("eq_degree").get<int>();
    c.roa_k = o.at("roa_k").get<int>();
    c.epsilon = o.at("epsilon").get<double>();
    c.use_slope = o.at("use_slope").get<bool>();
    c.all_pairs_slope = o.at("all_pairs_slope").get<bool>();
    c.support = o.at("support").get<std::string>();
    c.output_bias_shifted = o.at("output_bias_shifted").get<bool>();
    c.region.lower = j.at("region").at("lower").get<Vec>();
    c.region.upper = j.at("region").at("upper").get<Vec>();
    c.custom_region =
        j.at("region").at("custom").get<std::vector<std::string>>();
    c.shrink_iterations = j.at("shrink_iterations").get<int>();
    c.v_text = j.at("v").get<std::string>();
    c.v_gram = gram_from_json(j.at("v_gram"));
    c.derivative_gram = gram_from_json(j.at("derivative_gram"));
    for (auto& m : j.at("multipliers")) c.multipliers.push_back(mult_from_json(m));
    if (j.contains("gamma")) {
      c.gamma = j.at("gamma").get<double>();
      for (auto& m : j.at("roa_multipliers"))
        c.roa_multipliers.push_back(mult_from_json(m));
      for (auto& g : j.at("roa_grams")) c.roa_grams.push_back(gram_from_json(g));
    }
    const Json& s = j.at("solver");
    c.solve_status = s.at("status").get<std::string>();
    c.iterations = s.at("iterations").get<int>();
    c.res_primal = s.at("res_primal").get<double>();
    c.res_dual = s.at("res_dual").get<double>();
    c.res_gap = s.at("res_gap").get<double>();
    c.min_gram_eig = s.at("min_gram_eig").get<double>();
    c.recon_residual = s.at("recon_residual").get<double>();
    const Json& v = j.at("soundness");
    c.soundness.samples = v.at("samples").get<int>();
    c.soundness.positivity_violations = v.at("positivity_violations").get<int>();
    c.soundness.derivative_violations = v.at("derivative_violations").get<int>();
    c.soundness.worst_positivity_margin =
        v.at("worst_positivity_margin").get<double>();
    c.soundness.worst_derivative_margin =
        v.at("worst_derivative_margin").get<double>();
  } catch (const Json::exception& e) {
    throw Error(std::string("certificate JSON missing field: ") + e.what());
  }
  return c;
}

}  // namespace nnsos
