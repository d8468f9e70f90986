#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace nnsos {

// Library-wide error type. Thrown for contract violations (unknown variable,
// dimension mismatch, parse failure); converted to status codes at the C API.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

struct VarId {
  std::uint32_t index = UINT32_MAX;

  bool valid() const { return index != UINT32_MAX; }
  friend bool operator==(VarId a, VarId b) { return a.index == b.index; }
  friend bool operator<(VarId a, VarId b) { return a.index < b.index; }
};

// Bijective name <-> index registry. Indices are dense in insertion order and
// never move, so polynomials built early stay valid as the space grows.
class VariableSpace {
 public:
  VarId add(const std::string& name);
  VarId intern(const std::string& name);
  std::optional<VarId> find(std::string_view name) const;
  const std::string& name(VarId v) const;
  std::size_t size() const { return names_.size(); }

 private:
  std::vector<std::string> names_;
  std::map<std::string, std::uint32_t, std::less<>> index_;
};

// Sparse exponent vector, sorted by variable index, no zero exponents.
class Monomial {
 public:
  Monomial() = default;
  static Monomial one() { return Monomial(); }
  static Monomial var(VarId v, std::uint32_t exp = 1);

  bool is_one() const { return exps_.empty(); }
  std::uint32_t degree() const;
  std::uint32_t exponent(VarId v) const;
  Monomial times(const Monomial& other) const;
  // Removes v entirely; returns the exponent it had.
  std::uint32_t without(VarId v, Monomial* rest) const;

  std::span<const std::pair<std::uint32_t, std::uint32_t>> entries() const {
    return exps_;
  }

  friend bool operator==(const Monomial& a, const Monomial& b) {
    return a.exps_ == b.exps_;
  }

 private:
  std::vector<std::pair<std::uint32_t, std::uint32_t>> exps_;  // (var, exp>0)
  friend struct GrlexLess;
};

// Graded lexicographic order: total degree first, ties by exponents with the
// lowest-index variable most significant.
struct GrlexLess {
  bool operator()(const Monomial& a, const Monomial& b) const;
};
struct GrlexGreater {
  bool operator()(const Monomial& a, const Monomial& b) const {
    return GrlexLess{}(b, a);
  }
};

// Coefficients below this magnitude are dropped on canonicalization.
double poly_zero_tolerance();
void set_poly_zero_tolerance(double tol);

// Immutable-after-construction sparse multivariate polynomial. Terms are kept
// canonical: grlex-descending, no coefficient below the zero tolerance.
class Polynomial {
 public:
  using TermMap = std::map<Monomial, double, GrlexGreater>;

  Polynomial() = default;
  explicit Polynomial(double constant);
  static Polynomial variable(VarId v);
  static Polynomial term(double coef, const Monomial& m);

  bool is_zero() const { return terms_.empty(); }
  std::uint32_t degree() const;
  std::size_t term_count() const { return terms_.size(); }
  const TermMap& terms() const { return terms_; }
  double coefficient(const Monomial& m) const;

  Polynomial operator+(const Polynomial& b) const;
  Polynomial operator-(const Polynomial& b) const;
  Polynomial operator*(const Polynomial& b) const;
  Polynomial operator*(double s) const;
  Polynomial operator-() const { return *this * -1.0; }
  Polynomial& operator+=(const Polynomial& b);
  Polynomial& operator-=(const Polynomial& b);

  Polynomial differentiate(VarId v) const;
  double evaluate(std::span<const double> point) const;  // indexed by VarId
  Polynomial substitute(VarId v, const Polynomial& expr) const;
  // Applies z_i -> scale * z_i for every variable in vars.
  Polynomial scale_vars(std::span<const VarId> vars, double scale) const;

  std::uint32_t max_exponent(VarId v) const;
  std::vector<VarId> variables() const;

  friend bool operator==(const Polynomial& a, const Polynomial& b) {
    return a.terms_ == b.terms_;
  }

  // Builder entry point: accumulates then canonicalizes.
  void add_term(double coef, const Monomial& m);
  void canonicalize();

 private:
  TermMap terms_;
};

inline Polynomial operator*(double s, const Polynomial& p) { return p * s; }

}  // namespace nnsos
