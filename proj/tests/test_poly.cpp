#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "nnsos/poly.hpp"
#include "nnsos/polyparse.hpp"

using namespace nnsos;

namespace {

// Coefficients are dyadic rationals (k/4), so all ring operations on these
// inputs are exact in double precision and structural equality is meaningful.
Polynomial random_poly(std::mt19937_64& rng, std::span<const VarId> vars,
                       int max_terms = 6, int max_deg = 4) {
  std::uniform_int_distribution<int> nterms(1, max_terms);
  std::uniform_int_distribution<int> pick(0, static_cast<int>(vars.size()) - 1);
  std::uniform_int_distribution<int> deg(0, max_deg);
  std::uniform_int_distribution<int> coef(-16, 16);
  Polynomial p;
  int n = nterms(rng);
  for (int t = 0; t < n; ++t) {
    Monomial m;
    int d = deg(rng);
    for (int k = 0; k < d; ++k) m = m.times(Monomial::var(vars[pick(rng)]));
    p.add_term(coef(rng) * 0.25, m);
  }
  p.canonicalize();
  return p;
}

}  // namespace

TEST_CASE("addition basics") {
  VariableSpace sp;
  auto x = sp.add("x"), y = sp.add("y");
  Polynomial x2 = Polynomial::term(1, Monomial::var(x, 2));
  Polynomial p = x2 + Polynomial(1.0);

  CHECK(p + x2 * 2.0 == x2 * 3.0 + Polynomial(1.0));
  CHECK(p + Polynomial() == p);

  Polynomial xy = Polynomial::variable(x) - Polynomial::variable(y);
  Polynomial yx = Polynomial::variable(y) - Polynomial::variable(x);
  Polynomial zero = xy + yx;
  CHECK(zero.is_zero());
  CHECK(zero.term_count() == 0);
}

TEST_CASE("multiplication basics") {
  VariableSpace sp;
  auto x = sp.add("x"), y = sp.add("y");
  Polynomial px = Polynomial::variable(x), py = Polynomial::variable(y);

  Polynomial prod = (px + py) * (px - py);
  CHECK(prod == Polynomial::term(1, Monomial::var(x, 2)) -
                    Polynomial::term(1, Monomial::var(y, 2)));

  Polynomial p = px * 3.0 + Polynomial(2.0);
  CHECK(p * Polynomial(1.0) == p);

  Polynomial sq = (px + py) * (px + py);
  CHECK(sq.degree() == 2);
  CHECK(sq.coefficient(Monomial::var(x).times(Monomial::var(y))) == 2.0);
}

TEST_CASE("differentiate") {
  VariableSpace sp;
  auto z1 = sp.add("z1"), z2 = sp.add("z2");
  Polynomial z1c = Polynomial::term(1, Monomial::var(z1, 3));
  CHECK(z1c.differentiate(z1) == Polynomial::term(3, Monomial::var(z1, 2)));
  CHECK(Polynomial::variable(z2).differentiate(z1).is_zero());

  // Rotational field conserves the circle: grad(V) . f == 0.
  Polynomial V = Polynomial::term(1, Monomial::var(z1, 2)) +
                 Polynomial::term(1, Monomial::var(z2, 2));
  Polynomial vdot = V.differentiate(z1) * Polynomial::variable(z2) +
                    V.differentiate(z2) * (-Polynomial::variable(z1));
  CHECK(vdot.is_zero());
}

TEST_CASE("evaluate") {
  VariableSpace sp;
  auto z1 = sp.add("z1");
  Polynomial p = Polynomial::term(1, Monomial::var(z1, 2)) + Polynomial(2.0);
  double v[] = {3.0};
  CHECK(p.evaluate(v) == doctest::Approx(11.0));
  CHECK(Polynomial().evaluate(v) == 0.0);

  auto x = sp.add("x"), y = sp.add("y");
  Polynomial motzkin =
      Polynomial::term(1, Monomial::var(x, 4).times(Monomial::var(y, 2))) +
      Polynomial::term(1, Monomial::var(x, 2).times(Monomial::var(y, 4))) -
      Polynomial::term(3, Monomial::var(x, 2).times(Monomial::var(y, 2))) +
      Polynomial(1.0);
  double pt[] = {0.0, 1.0, 1.0};
  CHECK(motzkin.evaluate(pt) == doctest::Approx(0.0));
}

TEST_CASE("substitute") {
  VariableSpace sp;
  auto u = sp.add("u"), w = sp.add("w");
  Polynomial p = Polynomial::term(1, Monomial::var(u, 2));
  Polynomial expr = Polynomial::variable(w) + Polynomial(1.0);
  Polynomial sub = p.substitute(u, expr);
  CHECK(sub == Polynomial::term(1, Monomial::var(w, 2)) +
                   Polynomial::variable(w) * 2.0 + Polynomial(1.0));

  auto z1 = sp.add("z1"), z3 = sp.add("z3"), s = sp.add("s");
  Polynomial rename = Polynomial::variable(z3).substitute(
      z3, Polynomial::variable(z1) - Polynomial::variable(s));
  CHECK(rename == Polynomial::variable(z1) - Polynomial::variable(s));

  Polynomial zsub = (Polynomial::variable(z1) - Polynomial::variable(z3))
                        .substitute(z3, Polynomial());
  CHECK(zsub == Polynomial::variable(z1));
}

TEST_CASE("ring axioms on random inputs") {
  VariableSpace sp;
  std::vector<VarId> vars = {sp.add("a"), sp.add("b"), sp.add("c")};
  std::mt19937_64 rng(12345);
  for (int trial = 0; trial < 50; ++trial) {
    Polynomial p = random_poly(rng, vars);
    Polynomial q = random_poly(rng, vars);
    Polynomial r = random_poly(rng, vars);
    CHECK(p + q == q + p);
    CHECK(p * q == q * p);
    CHECK((p + q) + r == p + (q + r));
    CHECK((p * q) * r == p * (q * r));
    CHECK(p * (q + r) == p * q + p * r);
    // Product rule is exact in the coefficient ring.
    CHECK((p * q).differentiate(vars[0]) ==
          p * q.differentiate(vars[0]) + q * p.differentiate(vars[0]));
  }
}

TEST_CASE("evaluate is a ring homomorphism") {
  VariableSpace sp;
  std::vector<VarId> vars = {sp.add("a"), sp.add("b"), sp.add("c")};
  std::mt19937_64 rng(777);
  std::uniform_real_distribution<double> pt(-2.0, 2.0);
  for (int trial = 0; trial < 50; ++trial) {
    Polynomial a = random_poly(rng, vars);
    Polynomial b = random_poly(rng, vars);
    Polynomial c = random_poly(rng, vars);
    double point[] = {pt(rng), pt(rng), pt(rng)};
    double lhs = (a * b + c).evaluate(point);
    double rhs = a.evaluate(point) * b.evaluate(point) + c.evaluate(point);
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-9));
  }
}

TEST_CASE("substitute then evaluate equals composed assignment") {
  VariableSpace sp;
  std::vector<VarId> vars = {sp.add("a"), sp.add("b")};
  std::mt19937_64 rng(4242);
  std::uniform_real_distribution<double> pt(-1.5, 1.5);
  for (int trial = 0; trial < 30; ++trial) {
    Polynomial p = random_poly(rng, vars);
    Polynomial expr = random_poly(rng, vars, 4, 2);
    double point[] = {pt(rng), pt(rng)};
    double composed[] = {expr.evaluate(point), point[1]};
    double lhs = p.substitute(vars[0], expr).evaluate(point);
    double rhs = p.evaluate(composed);
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-9));
  }
}

TEST_CASE("grlex ordering is graded") {
  VariableSpace sp;
  auto x = sp.add("x"), y = sp.add("y");
  GrlexLess less;
  CHECK(less(Monomial::var(x), Monomial::var(x, 2)));
  CHECK(less(Monomial::var(y), Monomial::var(x)));  // same degree, x first
  CHECK(less(Monomial::var(x).times(Monomial::var(y)), Monomial::var(x, 2)));
  CHECK(!less(Monomial::var(x, 2), Monomial::var(x, 2)));
}

TEST_CASE("parser and printer round-trip") {
  VariableSpace sp;
  sp.add("z1");
  sp.add("z2");
  sp.add("u");
  Polynomial p = parse_polynomial("3*z1^2*z2 - 0.5*u + 1", sp);
  CHECK(print_polynomial(p, sp) == "3*z1^2*z2 - 0.5*u + 1");

  Polynomial q = parse_polynomial("-(z1 - z2)^2 + 2*z1*z2", sp);
  Polynomial expect = parse_polynomial("-z1^2 + 4*z1*z2 - z2^2", sp);
  CHECK(q == expect);

  CHECK_THROWS_AS(parse_polynomial("z1 + bogus", sp), Error);
  CHECK_THROWS_AS(parse_polynomial("z1 + + z2 )", sp), Error);

  std::mt19937_64 rng(99);
  std::vector<VarId> vars;
  for (auto n : {"z1", "z2", "u"}) vars.push_back(*sp.find(n));
  for (int trial = 0; trial < 100; ++trial) {
    Polynomial r = random_poly(rng, vars, 8, 5);
    Polynomial back = parse_polynomial(print_polynomial(r, sp), sp);
    CHECK(back == r);
  }
}

TEST_CASE("variable space registry") {
  VariableSpace sp;
  auto a = sp.add("alpha");
  CHECK(sp.find("alpha").has_value());
  CHECK(sp.find("alpha")->index == a.index);
  CHECK(!sp.find("beta").has_value());
  CHECK_THROWS_AS(sp.add("alpha"), Error);
  CHECK(sp.name(a) == "alpha");
  CHECK_THROWS_AS(sp.name(VarId{57}), Error);
}

TEST_CASE("evaluate requires every variable to be assigned") {
  VariableSpace sp;
  sp.add("a");
  auto b = sp.add("b");
  Polynomial p = Polynomial::variable(b);
  double short_point[] = {1.0};  // no value for b
  CHECK_THROWS_WITH_AS(p.evaluate(short_point),
                       doctest::Contains("missing assignment"), Error);
}

TEST_CASE("scale_vars rescales a box region") {
  VariableSpace sp;
  auto x = sp.add("x");
  std::vector<VarId> vars = {x};
  Polynomial p = parse_polynomial("x^2 - 2*x + 1", sp);
  Polynomial scaled = p.scale_vars(vars, 0.5);
  CHECK(scaled == parse_polynomial("0.25*x^2 - x + 1", sp));
}
