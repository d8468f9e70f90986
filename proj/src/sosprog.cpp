#include "nnsos/sosprog.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <set>

namespace nnsos {

void AffExpr::add(const AffExpr& other, double s) {
  constant += s * other.constant;
  if (other.linear.empty()) return;
  std::vector<std::pair<ColId, double>> merged;
  merged.reserve(linear.size() + other.linear.size());
  std::size_t i = 0, j = 0;
  while (i < linear.size() && j < other.linear.size()) {
    if (linear[i].first < other.linear[j].first) {
      merged.push_back(linear[i++]);
    } else if (linear[i].first > other.linear[j].first) {
      merged.emplace_back(other.linear[j].first, s * other.linear[j].second);
      ++j;
    } else {
      double c = linear[i].second + s * other.linear[j].second;
      if (c != 0.0) merged.emplace_back(linear[i].first, c);
      ++i, ++j;
    }
  }
  for (; i < linear.size(); ++i) merged.push_back(linear[i]);
  for (; j < other.linear.size(); ++j)
    merged.emplace_back(other.linear[j].first, s * other.linear[j].second);
  linear = std::move(merged);
}

void AffExpr::scale(double s) {
  constant *= s;
  for (auto& [c, v] : linear) v *= s;
}

LinPoly LinPoly::from(const Polynomial& p) {
  LinPoly out;
  for (auto& [m, c] : p.terms()) out.terms_.emplace(m, AffExpr::of(c));
  return out;
}

void LinPoly::add_term(const Monomial& m, const AffExpr& aff, double scale) {
  auto [it, inserted] = terms_.emplace(m, AffExpr{});
  it->second.add(aff, scale);
}

LinPoly& LinPoly::operator+=(const LinPoly& other) {
  for (auto& [m, aff] : other.terms_) add_term(m, aff);
  prune();
  return *this;
}

LinPoly& LinPoly::operator-=(const LinPoly& other) {
  for (auto& [m, aff] : other.terms_) add_term(m, aff, -1.0);
  prune();
  return *this;
}

LinPoly& LinPoly::operator*=(double s) {
  for (auto& [m, aff] : terms_) aff.scale(s);
  return *this;
}

LinPoly LinPoly::operator*(const Polynomial& p) const {
  LinPoly out;
  for (auto& [m1, aff] : terms_)
    for (auto& [m2, c] : p.terms()) out.add_term(m1.times(m2), aff, c);
  out.prune();
  return out;
}

LinPoly LinPoly::differentiate(VarId v) const {
  LinPoly out;
  Monomial rest;
  for (auto& [m, aff] : terms_) {
    std::uint32_t e = m.without(v, &rest);
    if (e == 0) continue;
    out.add_term(rest.times(Monomial::var(v, e - 1)), aff,
                 static_cast<double>(e));
  }
  out.prune();
  return out;
}

void LinPoly::prune() {
  for (auto it = terms_.begin(); it != terms_.end();) {
    AffExpr& a = it->second;
    if (a.linear.empty() && std::abs(a.constant) <= poly_zero_tolerance()) {
      it = terms_.erase(it);
    } else {
      ++it;
    }
  }
}

std::vector<Monomial> LinPoly::support() const {
  std::vector<Monomial> out;
  out.reserve(terms_.size());
  for (auto& [m, aff] : terms_) out.push_back(m);
  return out;
}

std::vector<VarId> LinPoly::variables() const {
  std::set<std::uint32_t> seen;
  for (auto& [m, aff] : terms_)
    for (auto& [v, e] : m.entries()) seen.insert(v);
  std::vector<VarId> out;
  for (auto v : seen) out.push_back(VarId{v});
  return out;
}

std::vector<Monomial> monomials_up_to(std::span<const VarId> vars, int max_deg,
                                      int min_deg) {
  std::vector<Monomial> out;
  std::vector<std::uint32_t> exps(vars.size(), 0);
  std::function<void(std::size_t, int)> rec = [&](std::size_t idx, int left) {
    if (idx == vars.size()) {
      int deg = max_deg - left;
      if (deg >= min_deg) {
        Monomial m;
        for (std::size_t i = 0; i < vars.size(); ++i)
          if (exps[i] > 0) m = m.times(Monomial::var(vars[i], exps[i]));
        out.push_back(m);
      }
      return;
    }
    for (int e = 0; e <= left; ++e) {
      exps[idx] = static_cast<std::uint32_t>(e);
      rec(idx + 1, left - e);
    }
    exps[idx] = 0;
  };
  rec(0, max_deg);
  std::sort(out.begin(), out.end(), GrlexLess{});
  return out;
}

namespace {

// 2*b as an exponent map for subtraction tests.
bool try_subtract(const Monomial& twice_b, const Monomial& b1, Monomial* out) {
  // out = twice_b - b1 if componentwise nonnegative.
  Monomial r;
  auto eb = twice_b.entries();
  auto e1 = b1.entries();
  std::size_t i = 0, j = 0;
  Monomial acc;
  while (j < e1.size()) {
    if (i >= eb.size()) return false;
    if (eb[i].first < e1[j].first) {
      acc = acc.times(Monomial::var(VarId{eb[i].first}, eb[i].second));
      ++i;
    } else if (eb[i].first > e1[j].first) {
      return false;  // b1 has a variable twice_b lacks
    } else {
      if (e1[j].second > eb[i].second) return false;
      std::uint32_t rem = eb[i].second - e1[j].second;
      if (rem > 0) acc = acc.times(Monomial::var(VarId{eb[i].first}, rem));
      ++i, ++j;
    }
  }
  for (; i < eb.size(); ++i)
    acc = acc.times(Monomial::var(VarId{eb[i].first}, eb[i].second));
  *out = acc;
  return true;
}

}  // namespace

std::vector<Monomial> gram_basis_for(std::span<const Monomial> support,
                                     std::span<const VarId> vars) {
  if (support.empty()) return {};
  // Per-variable exponent ranges and total-degree range over the support.
  std::uint32_t dmin = UINT32_MAX, dmax = 0;
  std::map<std::uint32_t, std::pair<std::uint32_t, std::uint32_t>> range;
  for (VarId v : vars) range[v.index] = {UINT32_MAX, 0};
  for (auto& m : support) {
    dmin = std::min(dmin, m.degree());
    dmax = std::max(dmax, m.degree());
    for (auto& [vi, r] : range) {
      std::uint32_t e = m.exponent(VarId{vi});
      r.first = std::min(r.first, e);
      r.second = std::max(r.second, e);
    }
  }
  int lo_total = static_cast<int>((dmin + 1) / 2);
  int hi_total = static_cast<int>(dmax / 2);
  if (lo_total > hi_total) return {};

  std::vector<VarId> vlist(vars.begin(), vars.end());
  std::vector<std::pair<int, int>> vrange;
  for (VarId v : vlist) {
    auto [lo, hi] = range[v.index];
    vrange.emplace_back(static_cast<int>((lo + 1) / 2),
                        static_cast<int>(hi / 2));
  }
  std::vector<Monomial> basis;
  std::vector<std::uint32_t> exps(vlist.size(), 0);
  std::function<void(std::size_t, int)> rec = [&](std::size_t idx, int left) {
    if (idx == vlist.size()) {
      int deg = hi_total - left;
      if (deg >= lo_total) {
        Monomial m;
        for (std::size_t i = 0; i < vlist.size(); ++i)
          if (exps[i] > 0) m = m.times(Monomial::var(vlist[i], exps[i]));
        basis.push_back(m);
      }
      return;
    }
    auto [elo, ehi] = vrange[idx];
    for (int e = elo; e <= std::min(ehi, left); ++e) {
      exps[idx] = static_cast<std::uint32_t>(e);
      rec(idx + 1, left - e);
    }
    exps[idx] = 0;
  };
  // Lower per-variable bounds must fit in the remaining degree budget; the
  // recursion handles upper bounds, the min-degree filter handles the rest.
  rec(0, hi_total);
  std::sort(basis.begin(), basis.end(), GrlexLess{});

  // Iterative diagonal-consistency reduction: drop b when Q(b,b) is forced to
  // zero because 2b is unreachable, which by PSD-ness kills the whole row.
  std::set<Monomial, GrlexLess> supp(support.begin(), support.end());
  bool changed = true;
  while (changed) {
    changed = false;
    std::set<Monomial, GrlexLess> in_basis(basis.begin(), basis.end());
    std::vector<Monomial> kept;
    for (auto& b : basis) {
      Monomial twice = b.times(b);
      bool ok = supp.contains(twice);
      if (!ok) {
        for (auto& b1 : basis) {
          if (b1 == b) continue;
          Monomial other;
          if (try_subtract(twice, b1, &other) && !(other == b) &&
              in_basis.contains(other)) {
            ok = true;
            break;
          }
        }
      }
      if (ok) {
        kept.push_back(b);
      } else {
        changed = true;
      }
    }
    basis = std::move(kept);
  }
  return basis;
}

ColId SosProgram::new_free_var(const std::string& name) {
  free_names_.push_back(name);
  return static_cast<ColId>(free_names_.size() - 1);
}

int SosProgram::add_block(int dim) {
  block_dims_.push_back(dim);
  return static_cast<int>(block_dims_.size() - 1);
}

ColId SosProgram::entry_col(int block, int i, int j) {
  entries_.push_back({block, i, j});
  return kEntryBase + static_cast<ColId>(entries_.size() - 1);
}

LinPoly SosProgram::new_free_poly(std::span<const Monomial> basis,
                                  const std::string& name) {
  LinPoly p;
  int k = 0;
  for (auto& m : basis) {
    ColId c = new_free_var(name + "[" + std::to_string(k++) + "]");
    p.add_term(m, AffExpr::col(c));
  }
  named_.push_back({name, p, -1});
  return p;
}

LinPoly SosProgram::new_sos_poly(std::span<const Monomial> basis,
                                 const std::string& name) {
  int dim = static_cast<int>(basis.size());
  if (dim == 0) throw Error("SOS polynomial needs a non-empty basis");
  int blk = add_block(dim);
  LinPoly p;
  for (int i = 0; i < dim; ++i)
    for (int j = i; j < dim; ++j) {
      ColId c = entry_col(blk, i, j);
      p.add_term(basis[i].times(basis[j]), AffExpr::col(c, i == j ? 1.0 : 2.0));
    }
  named_.push_back({name, p, blk});
  return p;
}

int SosProgram::add_sos_constraint(const LinPoly& expr,
                                   const std::string& name) {
  auto vars = expr.variables();
  auto basis = gram_basis_for(expr.support(), vars);
  return add_sos_constraint(expr, std::move(basis), name);
}

int SosProgram::add_sos_constraint(const LinPoly& expr,
                                   std::vector<Monomial> basis,
                                   const std::string& name) {
  Constraint c;
  c.name = name;
  c.expr = expr;
  c.basis = std::move(basis);
  if (c.expr.empty() && c.basis.empty()) {
    c.block = -1;  // structurally zero expression: trivially SOS
  } else {
    if (c.basis.empty())
      throw Error("SOS constraint '" + name +
                  "': no Gram basis covers the expression support");
    c.block = add_block(static_cast<int>(c.basis.size()));
  }
  constraints_.push_back(std::move(c));
  return static_cast<int>(constraints_.size() - 1);
}

void SosProgram::add_zero_constraint(const LinPoly& expr,
                                     const std::string& name) {
  zeros_.push_back(expr);
  zero_names_.push_back(name);
}

void SosProgram::maximize(const AffExpr& objective) {
  objective_ = objective;
  has_objective_ = true;
}

SdpProblem SosProgram::lower() const {
  SdpProblem out;
  out.block_dims = block_dims_;
  out.num_free = num_free();

  auto push_aff = [&](SdpRow& row, const AffExpr& aff, double scale) {
    // Moves scale*aff's linear part onto the LHS of the row.
    for (auto& [col, coef] : aff.linear) {
      if (col >= kEntryBase) {
        const GramEntry& e = entries_[static_cast<std::size_t>(col - kEntryBase)];
        row.mat.push_back({e.block, e.i, e.j, scale * coef});
      } else {
        row.lin.push_back({static_cast<int>(col), scale * coef});
      }
    }
  };

  for (auto& c : constraints_) {
    if (c.block < 0) {
      if (!c.expr.empty())
        throw Error("SOS constraint '" + c.name + "' lost its Gram block");
      continue;
    }
    // Row per distinct monomial of (basis x basis) union support:
    //   sum Q pair terms - expr.linear = expr.constant
    std::map<Monomial, SdpRow, GrlexLess> rows;
    int dim = static_cast<int>(c.basis.size());
    for (int i = 0; i < dim; ++i)
      for (int j = i; j < dim; ++j) {
        Monomial mu = c.basis[i].times(c.basis[j]);
        rows[mu].mat.push_back({c.block, i, j, i == j ? 1.0 : 2.0});
      }
    for (auto& [mu, aff] : c.expr.terms()) {
      auto it = rows.find(mu);
      if (it == rows.end()) {
        // No Gram pair can produce this monomial. When its coefficient is a
        // decision expression the lowering pins that expression to zero; a
        // fixed nonzero coefficient makes the constraint structurally
        // impossible and deserves a diagnostic instead.
        if (aff.linear.empty()) {
          std::string desc;
          for (auto& [v, e] : mu.entries())
            desc += "#" + std::to_string(v) + "^" + std::to_string(e) + " ";
          throw Error("SOS constraint '" + c.name +
                      "': monomial not coverable by Gram basis: " + desc);
        }
        SdpRow row;
        row.rhs = aff.constant;
        push_aff(row, aff, -1.0);
        rows.emplace(mu, std::move(row));
        continue;
      }
      SdpRow& row = it->second;
      row.rhs += aff.constant;
      push_aff(row, aff, -1.0);
    }
    for (auto& [mu, row] : rows) out.rows.push_back(std::move(row));
  }

  for (std::size_t zi = 0; zi < zeros_.size(); ++zi) {
    for (auto& [mu, aff] : zeros_[zi].terms()) {
      SdpRow row;
      row.rhs = -aff.constant;
      push_aff(row, aff, 1.0);
      out.rows.push_back(std::move(row));
    }
  }

  if (has_objective_) {
    for (auto& [col, coef] : objective_.linear) {
      if (col >= kEntryBase) {
        const GramEntry& e = entries_[static_cast<std::size_t>(col - kEntryBase)];
        out.obj_mat.push_back({e.block, e.i, e.j, coef});
      } else {
        out.obj_lin.push_back({static_cast<int>(col), coef});
      }
    }
  }
  return out;
}

double SosProgram::eval_aff(const AffExpr& a, const ConicSolution& sol) const {
  double v = a.constant;
  for (auto& [col, coef] : a.linear) {
    if (col >= kEntryBase) {
      const GramEntry& e = entries_[static_cast<std::size_t>(col - kEntryBase)];
      v += coef * sol.blocks[e.block].at(e.i, e.j);
    } else {
      v += coef * sol.free_vars[static_cast<std::size_t>(col)];
    }
  }
  return v;
}

Polynomial SosProgram::eval_poly(const LinPoly& p,
                                 const ConicSolution& sol) const {
  Polynomial out;
  for (auto& [m, aff] : p.terms()) out.add_term(eval_aff(aff, sol), m);
  out.canonicalize();
  return out;
}

SosSolution SosProgram::reconstruct(const ConicSolution& sol, double psd_tol,
                                    double recon_tol) const {
  SosSolution out;
  out.status = sol.status;
  out.iterations = sol.iterations;
  if (sol.status != SolveStatus::Optimal && sol.status != SolveStatus::Feasible) {
    out.reject_reason = std::string("solver status: ") + to_string(sol.status);
    return out;
  }
  out.free_values = sol.free_vars;
  out.objective = has_objective_ ? eval_aff(objective_, sol) : 0.0;
  out.min_gram_eig = std::numeric_limits<double>::infinity();
  out.max_recon_residual = 0.0;

  for (auto& np : named_) {
    out.polynomials[np.name] = eval_poly(np.poly, sol);
    if (np.block >= 0) {
      out.gram[np.name] = sol.blocks[np.block];
      out.min_gram_eig =
          std::min(out.min_gram_eig, sym_min_eig(sol.blocks[np.block]));
    }
  }
  for (auto& c : constraints_) {
    if (c.block < 0) continue;
    const Mat& Q = sol.blocks[c.block];
    out.gram[c.name] = Q;
    out.min_gram_eig = std::min(out.min_gram_eig, sym_min_eig(Q));
    // Expand b^T Q b and compare against the numeric expression.
    Polynomial expansion;
    int dim = static_cast<int>(c.basis.size());
    for (int i = 0; i < dim; ++i)
      for (int j = i; j < dim; ++j)
        expansion.add_term((i == j ? 1.0 : 2.0) * Q.at(i, j),
                           c.basis[i].times(c.basis[j]));
    expansion.canonicalize();
    Polynomial expr = eval_poly(c.expr, sol);
    Polynomial diff = expansion - expr;
    double worst = 0.0;
    for (auto& [m, v] : diff.terms()) worst = std::max(worst, std::abs(v));
    out.max_recon_residual = std::max(out.max_recon_residual, worst);
  }
  if (out.min_gram_eig == std::numeric_limits<double>::infinity())
    out.min_gram_eig = 0.0;

  if (out.max_recon_residual > recon_tol) {
    out.reject_reason = "Gram reconstruction residual " +
                        std::to_string(out.max_recon_residual) +
                        " exceeds tolerance";
    return out;
  }
  if (out.min_gram_eig < -psd_tol) {
    out.reject_reason = "Gram block eigenvalue " +
                        std::to_string(out.min_gram_eig) + " below -psd_tol";
    return out;
  }
  out.accepted = true;
  return out;
}

}  // namespace nnsos
