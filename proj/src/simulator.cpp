#include "nnsos/simulator.hpp"

#include <cmath>
#include <fstream>
#include <random>

#include "nnsos/polyparse.hpp"

namespace nnsos {

double AuxRule::evaluate(double d) const {
  switch (kind) {
    case AuxKind::XMinusSin: return d - std::sin(d);
  }
  return 0.0;
}

double AuxRule::sector_alpha(double lo, double hi) const {
  switch (kind) {
    case AuxKind::XMinusSin: {
      auto chord = [](double e) {
        if (std::abs(e) < 1e-9) return 0.0;
        return (e - std::sin(e)) / e;
      };
      return std::max(chord(lo), chord(hi));
    }
  }
  return 0.0;
}

void ProblemSpec::check() const {
  if (!space) throw Error("problem has no variable space");
  if (dynamics.size() != state_vars.size())
    throw Error("dynamics count must match state count");
  if (!nn) throw Error("problem has no controller network");
  if (nn->input_dim() != static_cast<int>(state_vars.size()))
    throw Error("network input width " + std::to_string(nn->input_dim()) +
                " does not match state count " +
                std::to_string(state_vars.size()));
  if (nn->output_dim() != static_cast<int>(input_vars.size()))
    throw Error("network output width does not match input variable count");
  region.check();
  if (region.dim() != static_cast<int>(state_vars.size()))
    throw Error("region dimension does not match state count");
  if (delta_var.has_value() != delta_interval.has_value())
    throw Error("uncertainty variable and interval must come together");
  if (delta_interval && !(delta_interval->first < delta_interval->second))
    throw Error("uncertainty interval must have lo < hi");
}

void SimConfig::check() const {
  if (!(step > 0)) throw Error("simulation step must be positive");
  if (!(horizon >= step)) throw Error("simulation horizon must cover one step");
}

namespace {

// Flat term-list evaluator; Polynomial::evaluate's map walk is too slow for
// RK4 inner loops.
struct CompiledPoly {
  struct Term {
    double coef;
    std::uint32_t begin, end;  // range in vars
  };
  std::vector<Term> terms;
  std::vector<std::uint32_t> vars;  // variable indices, repeated by exponent

  explicit CompiledPoly(const Polynomial& p) {
    for (auto& [m, c] : p.terms()) {
      Term t{c, static_cast<std::uint32_t>(vars.size()), 0};
      for (auto& [v, e] : m.entries())
        for (std::uint32_t k = 0; k < e; ++k) vars.push_back(v);
      t.end = static_cast<std::uint32_t>(vars.size());
      terms.push_back(t);
    }
  }

  double eval(std::span<const double> pt) const {
    double s = 0.0;
    for (auto& t : terms) {
      double v = t.coef;
      for (std::uint32_t k = t.begin; k < t.end; ++k) v *= pt[vars[k]];
      s += v;
    }
    return s;
  }
};

}  // namespace

Trajectory integrate(const Rhs& rhs, std::span<const double> z0,
                     const SimConfig& cfg) {
  cfg.check();
  const std::size_t n = z0.size();
  Trajectory out;
  Vec z(z0.begin(), z0.end());
  Vec k1(n), k2(n), k3(n), k4(n), tmp(n);
  double t = 0.0;
  int inside_streak = 0;
  const int steps = static_cast<int>(std::ceil(cfg.horizon / cfg.step));
  out.times.push_back(t);
  out.states.push_back(z);
  for (int s = 0; s < steps; ++s) {
    rhs(z, k1);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = z[i] + 0.5 * cfg.step * k1[i];
    rhs(tmp, k2);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = z[i] + 0.5 * cfg.step * k2[i];
    rhs(tmp, k3);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = z[i] + cfg.step * k3[i];
    rhs(tmp, k4);
    for (std::size_t i = 0; i < n; ++i)
      z[i] += cfg.step / 6.0 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
    t += cfg.step;
    out.times.push_back(t);
    out.states.push_back(z);
    double norm = 0.0;
    bool bad = false;
    for (double v : z) {
      if (!std::isfinite(v)) bad = true;
      norm += v * v;
    }
    norm = std::sqrt(norm);
    if (bad || norm > cfg.blowup) {
      out.exit_reason = ExitReason::Diverged;
      return out;
    }
    inside_streak = norm <= cfg.convergence_radius ? inside_streak + 1 : 0;
    if (inside_streak >= 50) {
      out.converged = true;
      out.exit_reason = ExitReason::Converged;
      return out;
    }
  }
  out.exit_reason = ExitReason::Horizon;
  return out;
}

Rhs make_closed_loop_rhs(const ProblemSpec& spec, double delta_value) {
  spec.check();
  auto compiled = std::make_shared<std::vector<CompiledPoly>>();
  for (auto& f : spec.dynamics) compiled->emplace_back(f);
  auto pt = std::make_shared<Vec>(spec.space->size(), 0.0);
  // Copies of the light lookup tables keep the closure self-contained.
  std::vector<std::uint32_t> state_idx;
  for (auto v : spec.state_vars) state_idx.push_back(v.index);
  std::vector<std::uint32_t> input_idx;
  for (auto v : spec.input_vars) input_idx.push_back(v.index);
  auto aux = spec.aux_rules;
  auto nn = spec.nn;
  double umax = spec.u_max;
  std::optional<std::uint32_t> delta_idx;
  if (spec.delta_var) delta_idx = spec.delta_var->index;

  return [=](std::span<const double> z, std::span<double> dz) {
    Vec& p = *pt;
    for (std::size_t i = 0; i < state_idx.size(); ++i) p[state_idx[i]] = z[i];
    for (auto& r : aux) p[r.var.index] = r.evaluate(p[r.driver.index]);
    if (delta_idx) p[*delta_idx] = delta_value;
    Vec u = nn->output(z);
    for (std::size_t i = 0; i < input_idx.size(); ++i) {
      double v = u[i];
      if (std::isfinite(umax)) v = std::clamp(v, -umax, umax);
      p[input_idx[i]] = v;
    }
    for (std::size_t i = 0; i < dz.size(); ++i) dz[i] = (*compiled)[i].eval(p);
  };
}

std::vector<BasinPoint> basin_sample_grid(const Rhs& rhs, const Box& box,
                                          int per_dim, const SimConfig& cfg) {
  box.check();
  if (per_dim < 2) throw Error("basin grid needs at least 2 points per axis");
  int dim = box.dim();
  std::vector<BasinPoint> out;
  std::vector<int> idx(dim, 0);
  while (true) {
    Vec z0(dim);
    for (int i = 0; i < dim; ++i)
      z0[i] = box.lower[i] +
              (box.upper[i] - box.lower[i]) * idx[i] / (per_dim - 1);
    Trajectory t = integrate(rhs, z0, cfg);
    out.push_back({z0, t.converged});
    int d = dim - 1;
    while (d >= 0 && ++idx[d] == per_dim) idx[d--] = 0;
    if (d < 0) break;
  }
  return out;
}

std::vector<BasinPoint> basin_sample_random(const Rhs& rhs, const Box& box,
                                            int count, std::uint64_t seed,
                                            const SimConfig& cfg) {
  box.check();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::vector<BasinPoint> out;
  for (int s = 0; s < count; ++s) {
    Vec z0(box.dim());
    for (int i = 0; i < box.dim(); ++i)
      z0[i] = box.lower[i] + u01(rng) * (box.upper[i] - box.lower[i]);
    Trajectory t = integrate(rhs, z0, cfg);
    out.push_back({std::move(z0), t.converged});
  }
  return out;
}

ViolationReport sample_certificate(const ProblemSpec& spec, const Polynomial& V,
                                   double epsilon, const Box& box, int n,
                                   std::uint64_t seed,
                                   std::span<const double> delta_values) {
  spec.check();
  box.check();
  std::vector<double> deltas(delta_values.begin(), delta_values.end());
  if (deltas.empty()) {
    if (spec.delta_interval) {
      deltas = {spec.delta_interval->first,
                0.5 * (spec.delta_interval->first + spec.delta_interval->second),
                spec.delta_interval->second};
    } else {
      deltas = {0.0};
    }
  }
  std::vector<Polynomial> grad;
  for (auto v : spec.state_vars) grad.push_back(V.differentiate(v));

  ViolationReport rep;
  rep.worst_positivity_margin = std::numeric_limits<double>::infinity();
  rep.worst_derivative_margin = -std::numeric_limits<double>::infinity();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  Vec vpt(spec.space->size(), 0.0);
  for (double dval : deltas) {
    Rhs rhs = make_closed_loop_rhs(spec, dval);
    Vec z(spec.state_vars.size()), dz(spec.state_vars.size());
    for (int s = 0; s < n; ++s) {
      double norm2z = 0.0;
      for (int i = 0; i < box.dim(); ++i) {
        z[i] = box.lower[i] + u01(rng) * (box.upper[i] - box.lower[i]);
        norm2z += z[i] * z[i];
      }
      for (std::size_t i = 0; i < z.size(); ++i)
        vpt[spec.state_vars[i].index] = z[i];
      double v = V.evaluate(vpt);
      double pos_margin = v - epsilon * norm2z * (1.0 - 1e-6);
      rep.worst_positivity_margin =
          std::min(rep.worst_positivity_margin, pos_margin);
      if (pos_margin < 0) ++rep.positivity_violations;

      rhs(z, dz);
      double vdot = 0.0;
      for (std::size_t i = 0; i < z.size(); ++i)
        vdot += grad[i].evaluate(vpt) * dz[i];
      double der_margin = vdot - 1e-6 * (1.0 + norm2z);
      rep.worst_derivative_margin =
          std::max(rep.worst_derivative_margin, der_margin);
      if (der_margin > 0) ++rep.derivative_violations;
      ++rep.samples;
    }
  }
  return rep;
}

void write_trajectory_csv(const std::string& path, const Trajectory& t,
                          std::span<const std::string> state_names) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write trajectory CSV: " + path);
  out << "t";
  for (auto& n : state_names) out << "," << n;
  out << "\n";
  for (std::size_t i = 0; i < t.times.size(); ++i) {
    out << format_double(t.times[i]);
    for (double v : t.states[i]) out << "," << format_double(v);
    out << "\n";
  }
}

void write_basin_csv(const std::string& path,
                     std::span<const BasinPoint> points,
                     std::span<const std::string> state_names) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write basin CSV: " + path);
  for (auto& n : state_names) out << n << ",";
  out << "converged\n";
  for (auto& p : points) {
    for (double v : p.z0) out << format_double(v) << ",";
    out << (p.converged ? 1 : 0) << "\n";
  }
}

}  // namespace nnsos
