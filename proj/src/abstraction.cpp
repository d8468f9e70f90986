#include "nnsos/abstraction.hpp"

#include <algorithm>
#include <cmath>

#include "nnsos/polyparse.hpp"

namespace nnsos {

const char* to_string(ConstraintTag t) {
  switch (t) {
    case ConstraintTag::ReluSign: return "relu-sign";
    case ConstraintTag::ReluComplementarity: return "relu-complementarity";
    case ConstraintTag::IbpBox: return "ibp-box";
    case ConstraintTag::TanhSector: return "tanh-sector";
    case ConstraintTag::Slope: return "slope";
    case ConstraintTag::Region: return "region";
    case ConstraintTag::Saturation: return "saturation";
    case ConstraintTag::RecastSector: return "recast-sector";
    case ConstraintTag::Robustness: return "robustness";
    case ConstraintTag::AffineLayer: return "affine-layer";
  }
  return "?";
}

void SemialgebraicSet::append(SemialgebraicSet&& other) {
  for (auto& c : other.inequalities) inequalities.push_back(std::move(c));
  for (auto& c : other.equalities) equalities.push_back(std::move(c));
  for (auto& c : other.region) region.push_back(std::move(c));
}

std::size_t SemialgebraicSet::count(ConstraintTag t) const {
  std::size_t n = 0;
  for (auto& c : inequalities) n += c.tag == t;
  for (auto& c : equalities) n += c.tag == t;
  for (auto& c : region) n += c.tag == t;
  return n;
}

NetVars NetVars::create(VariableSpace& space, const NeuralNetwork& nn,
                        std::span<const VarId> u_vars) {
  // intern, not add: repeated abstraction of the same problem instance (the
  // region-shrinking loop) reuses the variables it created the first time.
  NetVars v;
  for (int k = 0; k < nn.num_hidden_layers(); ++k) {
    std::vector<VarId> pre_k, post_k;
    for (int i = 0; i < nn.layer_width(k); ++i) {
      pre_k.push_back(space.intern("v" + std::to_string(k + 1) + "_" +
                                   std::to_string(i + 1)));
      post_k.push_back(space.intern("phi" + std::to_string(k + 1) + "_" +
                                    std::to_string(i + 1)));
    }
    v.pre.push_back(std::move(pre_k));
    v.post.push_back(std::move(post_k));
  }
  if (!u_vars.empty()) {
    if (static_cast<int>(u_vars.size()) != nn.output_dim())
      throw Error("input variable count does not match network outputs");
    v.u.assign(u_vars.begin(), u_vars.end());
  } else {
    for (int i = 0; i < nn.output_dim(); ++i)
      v.u.push_back(space.intern("u" + std::to_string(i + 1)));
  }
  return v;
}

std::vector<VarId> NetVars::all_post() const {
  std::vector<VarId> out;
  for (auto& layer : post) out.insert(out.end(), layer.begin(), layer.end());
  return out;
}

std::vector<VarId> NetVars::all_pre() const {
  std::vector<VarId> out;
  for (auto& layer : pre) out.insert(out.end(), layer.begin(), layer.end());
  return out;
}

SemialgebraicSet affine_layer_equalities(const NeuralNetwork& nn,
                                         const NetVars& vars,
                                         std::span<const VarId> z_vars) {
  SemialgebraicSet out;
  std::vector<VarId> input(z_vars.begin(), z_vars.end());
  for (int k = 0; k < nn.num_hidden_layers(); ++k) {
    const Layer& L = nn.hidden_layers()[k];
    for (int i = 0; i < L.W.rows; ++i) {
      Polynomial h = Polynomial::variable(vars.pre[k][i]) - Polynomial(L.b[i]);
      for (int j = 0; j < L.W.cols; ++j)
        h -= Polynomial::variable(input[j]) * L.W.at(i, j);
      out.equalities.push_back({std::move(h), ConstraintTag::AffineLayer,
                                "v" + std::to_string(k + 1) + "_" +
                                    std::to_string(i + 1)});
    }
    input = vars.post[k];
  }
  const Layer& L = nn.output_layer();
  for (int i = 0; i < L.W.rows; ++i) {
    Polynomial h = Polynomial::variable(vars.u[i]) - Polynomial(L.b[i]);
    for (int j = 0; j < L.W.cols; ++j)
      h -= Polynomial::variable(input[j]) * L.W.at(i, j);
    out.equalities.push_back(
        {std::move(h), ConstraintTag::AffineLayer, "u" + std::to_string(i + 1)});
  }
  return out;
}

SemialgebraicSet relu_constraints(const NeuralNetwork& nn,
                                  const IbpBounds* bounds,
                                  const NetVars& vars) {
  if (nn.activation() != Activation::ReLU)
    throw Error("relu_constraints called on a non-ReLU network");
  SemialgebraicSet out;
  for (int k = 0; k < nn.num_hidden_layers(); ++k) {
    for (int i = 0; i < nn.layer_width(k); ++i) {
      Polynomial phi = Polynomial::variable(vars.post[k][i]);
      Polynomial v = Polynomial::variable(vars.pre[k][i]);
      std::string node = std::to_string(k + 1) + "_" + std::to_string(i + 1);
      out.inequalities.push_back({phi, ConstraintTag::ReluSign, "phi" + node});
      out.inequalities.push_back(
          {phi - v, ConstraintTag::ReluSign, "phi-v " + node});
      out.equalities.push_back(
          {phi * (phi - v), ConstraintTag::ReluComplementarity, node});
      if (bounds) {
        Interval b = bounds->post[k][i];
        if (b.hi <= 0.0) {
          // IBP proves the node inactive; the box [0,0] is the equality.
          out.equalities.push_back({phi, ConstraintTag::IbpBox,
                                    "phi" + node + "=0"});
        } else {
          out.inequalities.push_back({phi - Polynomial(b.lo),
                                      ConstraintTag::IbpBox, "lo " + node});
          out.inequalities.push_back({Polynomial(b.hi) - phi,
                                      ConstraintTag::IbpBox, "hi " + node});
        }
      }
    }
  }
  return out;
}

double tanh_sector_alpha(Interval pre) {
  auto ratio = [](double e) {
    if (std::abs(e) < 1e-12) return 1.0;
    return std::tanh(e) / e;
  };
  return std::min(ratio(pre.lo), ratio(pre.hi));
}

SemialgebraicSet tanh_sector_constraints(const NeuralNetwork& nn,
                                         const IbpBounds* bounds,
                                         const NetVars& vars) {
  if (nn.activation() != Activation::Tanh)
    throw Error("tanh_sector_constraints called on a non-tanh network");
  SemialgebraicSet out;
  for (int k = 0; k < nn.num_hidden_layers(); ++k) {
    for (int i = 0; i < nn.layer_width(k); ++i) {
      Polynomial phi = Polynomial::variable(vars.post[k][i]);
      Polynomial v = Polynomial::variable(vars.pre[k][i]);
      std::string node = std::to_string(k + 1) + "_" + std::to_string(i + 1);
      double alpha = bounds ? tanh_sector_alpha(bounds->pre[k][i]) : 0.0;
      out.inequalities.push_back({(phi - v * alpha) * (v - phi),
                                  ConstraintTag::TanhSector,
                                  "sector " + node + " alpha=" +
                                      format_double(alpha)});
      double lo = bounds ? bounds->post[k][i].lo : -1.0;
      double hi = bounds ? bounds->post[k][i].hi : 1.0;
      out.inequalities.push_back(
          {phi - Polynomial(lo), ConstraintTag::IbpBox, "lo " + node});
      out.inequalities.push_back(
          {Polynomial(hi) - phi, ConstraintTag::IbpBox, "hi " + node});
    }
  }
  return out;
}

SemialgebraicSet slope_constraints(const NeuralNetwork& nn, const NetVars& vars,
                                   bool all_pairs) {
  SemialgebraicSet out;
  std::vector<std::pair<VarId, VarId>> nodes;  // (v, phi)
  std::vector<int> layer_of;
  for (int k = 0; k < nn.num_hidden_layers(); ++k)
    for (int i = 0; i < nn.layer_width(k); ++i) {
      nodes.emplace_back(vars.pre[k][i], vars.post[k][i]);
      layer_of.push_back(k);
    }
  for (std::size_t a = 0; a < nodes.size(); ++a) {
    for (std::size_t b = a + 1; b < nodes.size(); ++b) {
      if (!all_pairs && layer_of[a] != layer_of[b]) continue;
      Polynomial dv = Polynomial::variable(nodes[a].first) -
                      Polynomial::variable(nodes[b].first);
      Polynomial dphi = Polynomial::variable(nodes[a].second) -
                        Polynomial::variable(nodes[b].second);
      // Slope sector [0,1]: (dphi - 0*dv)(1*dv - dphi) >= 0.
      out.inequalities.push_back({dphi * (dv - dphi), ConstraintTag::Slope,
                                  std::to_string(a + 1) + "," +
                                      std::to_string(b + 1)});
    }
  }
  return out;
}

SemialgebraicSet region_constraints(const Box& box,
                                    std::span<const VarId> z_vars,
                                    const VariableSpace& space) {
  box.check();
  if (box.dim() != static_cast<int>(z_vars.size()))
    throw Error("region box dimension does not match state count");
  SemialgebraicSet out;
  for (std::size_t i = 0; i < z_vars.size(); ++i) {
    Polynomial z = Polynomial::variable(z_vars[i]);
    out.region.push_back({z - Polynomial(box.lower[i]), ConstraintTag::Region,
                          space.name(z_vars[i]) + " lower"});
    out.region.push_back({Polynomial(box.upper[i]) - z, ConstraintTag::Region,
                          space.name(z_vars[i]) + " upper"});
  }
  return out;
}

SemialgebraicSet region_from_polynomials(std::span<const Polynomial> dk) {
  SemialgebraicSet out;
  for (std::size_t i = 0; i < dk.size(); ++i)
    out.region.push_back(
        {dk[i], ConstraintTag::Region, "custom " + std::to_string(i + 1)});
  return out;
}

Polynomial recast_sector_constraint(VarId var, VarId driver, double alpha) {
  if (alpha < 0) throw Error("recast sector alpha must be nonnegative");
  Polynomial z3 = Polynomial::variable(var);
  Polynomial z1 = Polynomial::variable(driver);
  return z3 * (z1 * alpha - z3);
}

double recast_alpha_x_minus_sin(double lo, double hi) {
  auto chord = [](double e) {
    if (std::abs(e) < 1e-9) return 0.0;  // (e - sin e)/e -> 0 as e -> 0
    return (e - std::sin(e)) / e;
  };
  return std::max(chord(lo), chord(hi));
}

SemialgebraicSet saturation_constraints(VarId u_var, VarId w_var, double u_max,
                                        Interval ibp_u) {
  if (!(u_max > 0)) throw Error("u_max must be positive");
  SemialgebraicSet out;
  if (!std::isfinite(u_max)) return out;
  Polynomial u = Polynomial::variable(u_var);
  Polynomial w = Polynomial::variable(w_var);
  out.inequalities.push_back(
      {Polynomial(u_max) - w, ConstraintTag::Saturation, "w upper"});
  out.inequalities.push_back(
      {w + Polynomial(u_max), ConstraintTag::Saturation, "w lower"});
  double reach = std::max(std::abs(ibp_u.lo), std::abs(ibp_u.hi));
  if (reach <= u_max) {
    // Saturation provably inactive over the region.
    out.equalities.push_back({w - u, ConstraintTag::Saturation, "w=u"});
  } else {
    double kappa = u_max / reach;
    out.inequalities.push_back({(w - u * kappa) * (u - w),
                                ConstraintTag::Saturation,
                                "sector kappa=" + format_double(kappa)});
  }
  return out;
}

Polynomial robustness_constraint(VarId delta, double lo, double hi) {
  if (!(lo < hi)) throw Error("robustness interval must have lo < hi");
  Polynomial d = Polynomial::variable(delta);
  return (Polynomial(hi) - d) * (d - Polynomial(lo));
}

Polynomial Elimination::apply(Polynomial p) const {
  for (auto& [v, expr] : subs) p = p.substitute(v, expr);
  return p;
}

SemialgebraicSet eliminate_affine_equalities(SemialgebraicSet s,
                                             std::span<const VarId> eliminable,
                                             Elimination* out) {
  auto is_eliminable = [&](VarId v) {
    return std::find(eliminable.begin(), eliminable.end(), v) !=
           eliminable.end();
  };
  Elimination elim;
  bool progress = true;
  while (progress) {
    progress = false;
    for (std::size_t e = 0; e < s.equalities.size(); ++e) {
      const Polynomial& h = s.equalities[e].p;
      // Look for an eliminable variable appearing only as a bare linear term.
      VarId target;
      double coef = 0.0;
      for (auto& [m, c] : h.terms()) {
        auto entries = m.entries();
        if (entries.size() == 1 && entries[0].second == 1) {
          VarId v{entries[0].first};
          if (is_eliminable(v) && h.max_exponent(v) == 1) {
            // Ensure v appears in no other (mixed) monomial of h.
            bool pure = true;
            for (auto& [m2, c2] : h.terms()) {
              if (m2.exponent(v) > 0 && !(m2 == m)) pure = false;
            }
            if (pure) {
              target = v;
              coef = c;
              break;
            }
          }
        }
      }
      if (!target.valid()) continue;
      // h = coef * v + rest = 0  ->  v = -rest / coef.
      Polynomial rest = h - Polynomial::term(coef, Monomial::var(target));
      Polynomial expr = rest * (-1.0 / coef);
      for (auto& [v2, e2] : elim.subs) e2 = e2.substitute(target, expr);
      elim.subs.emplace_back(target, expr);
      s.equalities.erase(s.equalities.begin() + static_cast<long>(e));
      for (auto& c : s.inequalities) c.p = c.p.substitute(target, expr);
      for (auto& c : s.equalities) c.p = c.p.substitute(target, expr);
      for (auto& c : s.region) c.p = c.p.substitute(target, expr);
      progress = true;
      break;
    }
  }
  // Substituting can zero out an equality entirely (e.g. w = u when u was
  // already eliminated into the same expression); drop the husks.
  std::erase_if(s.equalities, [](const TaggedPoly& t) { return t.p.is_zero(); });
  if (out) *out = std::move(elim);
  return s;
}

std::string dump_constraints(const SemialgebraicSet& s,
                             const VariableSpace& space) {
  std::string out;
  auto emit = [&](const TaggedPoly& c, const char* kind) {
    out += std::string(to_string(c.tag)) + " [" + c.label + "] " +
           print_polynomial(c.p, space) + " " + kind + "\n";
  };
  for (auto& c : s.inequalities) emit(c, ">= 0");
  for (auto& c : s.equalities) emit(c, "= 0");
  for (auto& c : s.region) emit(c, ">= 0 (region)");
  return out;
}

}  // namespace nnsos
