#include "nnsos/poly.hpp"

#include <algorithm>
#include <cmath>

namespace nnsos {

VarId VariableSpace::add(const std::string& name) {
  if (name.empty()) throw Error("variable name must be non-empty");
  if (index_.contains(name)) throw Error("duplicate variable name: " + name);
  std::uint32_t idx = static_cast<std::uint32_t>(names_.size());
  names_.push_back(name);
  index_.emplace(name, idx);
  return VarId{idx};
}

VarId VariableSpace::intern(const std::string& name) {
  auto it = index_.find(name);
  if (it != index_.end()) return VarId{it->second};
  return add(name);
}

std::optional<VarId> VariableSpace::find(std::string_view name) const {
  auto it = index_.find(name);
  if (it == index_.end()) return std::nullopt;
  return VarId{it->second};
}

const std::string& VariableSpace::name(VarId v) const {
  if (!v.valid() || v.index >= names_.size())
    throw Error("unknown variable index " + std::to_string(v.index));
  return names_[v.index];
}

Monomial Monomial::var(VarId v, std::uint32_t exp) {
  Monomial m;
  if (exp > 0) m.exps_.emplace_back(v.index, exp);
  return m;
}

std::uint32_t Monomial::degree() const {
  std::uint32_t d = 0;
  for (auto& [v, e] : exps_) d += e;
  return d;
}

std::uint32_t Monomial::exponent(VarId v) const {
  for (auto& [var, e] : exps_)
    if (var == v.index) return e;
  return 0;
}

Monomial Monomial::times(const Monomial& other) const {
  Monomial out;
  out.exps_.reserve(exps_.size() + other.exps_.size());
  std::size_t i = 0, j = 0;
  while (i < exps_.size() && j < other.exps_.size()) {
    if (exps_[i].first < other.exps_[j].first) {
      out.exps_.push_back(exps_[i++]);
    } else if (exps_[i].first > other.exps_[j].first) {
      out.exps_.push_back(other.exps_[j++]);
    } else {
      out.exps_.emplace_back(exps_[i].first, exps_[i].second + other.exps_[j].second);
      ++i, ++j;
    }
  }
  for (; i < exps_.size(); ++i) out.exps_.push_back(exps_[i]);
  for (; j < other.exps_.size(); ++j) out.exps_.push_back(other.exps_[j]);
  return out;
}

std::uint32_t Monomial::without(VarId v, Monomial* rest) const {
  std::uint32_t e = 0;
  rest->exps_.clear();
  for (auto& [var, exp] : exps_) {
    if (var == v.index) {
      e = exp;
    } else {
      rest->exps_.emplace_back(var, exp);
    }
  }
  return e;
}

bool GrlexLess::operator()(const Monomial& a, const Monomial& b) const {
  std::uint32_t da = a.degree(), db = b.degree();
  if (da != db) return da < db;
  // Equal degree: walk variables in index order; the monomial with the larger
  // exponent on the first differing variable is the larger one.
  std::size_t i = 0, j = 0;
  while (i < a.exps_.size() && j < b.exps_.size()) {
    auto [va, ea] = a.exps_[i];
    auto [vb, eb] = b.exps_[j];
    if (va < vb) return false;  // a has power of an earlier var -> a larger
    if (va > vb) return true;
    if (ea != eb) return ea < eb;
    ++i, ++j;
  }
  return false;  // identical (same degree forces both exhausted together)
}

namespace {
double g_zero_tol = 1e-12;
}

double poly_zero_tolerance() { return g_zero_tol; }
void set_poly_zero_tolerance(double tol) { g_zero_tol = tol; }

Polynomial::Polynomial(double constant) {
  if (std::abs(constant) > g_zero_tol) terms_.emplace(Monomial::one(), constant);
}

Polynomial Polynomial::variable(VarId v) {
  return term(1.0, Monomial::var(v));
}

Polynomial Polynomial::term(double coef, const Monomial& m) {
  Polynomial p;
  if (std::abs(coef) > g_zero_tol) p.terms_.emplace(m, coef);
  return p;
}

std::uint32_t Polynomial::degree() const {
  return terms_.empty() ? 0 : terms_.begin()->first.degree();
}

double Polynomial::coefficient(const Monomial& m) const {
  auto it = terms_.find(m);
  return it == terms_.end() ? 0.0 : it->second;
}

void Polynomial::add_term(double coef, const Monomial& m) {
  auto [it, inserted] = terms_.emplace(m, coef);
  if (!inserted) it->second += coef;
}

void Polynomial::canonicalize() {
  for (auto it = terms_.begin(); it != terms_.end();) {
    if (std::abs(it->second) <= g_zero_tol) {
      it = terms_.erase(it);
    } else {
      ++it;
    }
  }
}

Polynomial Polynomial::operator+(const Polynomial& b) const {
  Polynomial out = *this;
  out += b;
  return out;
}

Polynomial& Polynomial::operator+=(const Polynomial& b) {
  for (auto& [m, c] : b.terms_) add_term(c, m);
  canonicalize();
  return *this;
}

Polynomial Polynomial::operator-(const Polynomial& b) const {
  Polynomial out = *this;
  out -= b;
  return out;
}

Polynomial& Polynomial::operator-=(const Polynomial& b) {
  for (auto& [m, c] : b.terms_) add_term(-c, m);
  canonicalize();
  return *this;
}

Polynomial Polynomial::operator*(const Polynomial& b) const {
  Polynomial out;
  for (auto& [ma, ca] : terms_)
    for (auto& [mb, cb] : b.terms_) out.add_term(ca * cb, ma.times(mb));
  out.canonicalize();
  return out;
}

Polynomial Polynomial::operator*(double s) const {
  Polynomial out;
  for (auto& [m, c] : terms_) out.add_term(c * s, m);
  out.canonicalize();
  return out;
}

Polynomial Polynomial::differentiate(VarId v) const {
  Polynomial out;
  Monomial rest;
  for (auto& [m, c] : terms_) {
    std::uint32_t e = m.without(v, &rest);
    if (e == 0) continue;
    out.add_term(c * static_cast<double>(e),
                 rest.times(Monomial::var(v, e - 1)));
  }
  out.canonicalize();
  return out;
}

double Polynomial::evaluate(std::span<const double> point) const {
  // Direct term summation with Neumaier-compensated accumulation.
  double sum = 0.0, comp = 0.0;
  for (auto& [m, c] : terms_) {
    double t = c;
    for (auto& [var, exp] : m.entries()) {
      if (var >= point.size())
        throw Error("missing assignment for variable index " +
                    std::to_string(var));
      double base = point[var];
      for (std::uint32_t k = 0; k < exp; ++k) t *= base;
    }
    double s = sum + t;
    if (std::abs(sum) >= std::abs(t)) {
      comp += (sum - s) + t;
    } else {
      comp += (t - s) + sum;
    }
    sum = s;
  }
  return sum + comp;
}

Polynomial Polynomial::substitute(VarId v, const Polynomial& expr) const {
  Polynomial out;
  std::vector<Polynomial> powers = {Polynomial(1.0)};  // expr^0, expr^1, ...
  Monomial rest;
  for (auto& [m, c] : terms_) {
    std::uint32_t e = m.without(v, &rest);
    if (e == 0) {
      out.add_term(c, m);
      continue;
    }
    while (powers.size() <= e) powers.push_back(powers.back() * expr);
    for (auto& [pm, pc] : powers[e].terms())
      out.add_term(c * pc, rest.times(pm));
  }
  out.canonicalize();
  return out;
}

Polynomial Polynomial::scale_vars(std::span<const VarId> vars,
                                  double scale) const {
  Polynomial out;
  for (auto& [m, c] : terms_) {
    double f = c;
    for (VarId v : vars) {
      std::uint32_t e = m.exponent(v);
      for (std::uint32_t k = 0; k < e; ++k) f *= scale;
    }
    out.add_term(f, m);
  }
  out.canonicalize();
  return out;
}

std::uint32_t Polynomial::max_exponent(VarId v) const {
  std::uint32_t e = 0;
  for (auto& [m, c] : terms_) e = std::max(e, m.exponent(v));
  return e;
}

std::vector<VarId> Polynomial::variables() const {
  std::vector<std::uint32_t> seen;
  for (auto& [m, c] : terms_)
    for (auto& [var, exp] : m.entries()) seen.push_back(var);
  std::sort(seen.begin(), seen.end());
  seen.erase(std::unique(seen.begin(), seen.end()), seen.end());
  std::vector<VarId> out;
  out.reserve(seen.size());
  for (auto v : seen) out.push_back(VarId{v});
  return out;
}

}  // namespace nnsos
