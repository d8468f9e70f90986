#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "nnsos/abstraction.hpp"
#include "nnsos/polyparse.hpp"

using namespace nnsos;

namespace {

Layer make_layer(std::vector<std::vector<double>> w, Vec b) {
  Mat W(static_cast<int>(w.size()), static_cast<int>(w[0].size()));
  for (int i = 0; i < W.rows; ++i)
    for (int j = 0; j < W.cols; ++j) W.at(i, j) = w[i][j];
  return {std::move(W), std::move(b)};
}

NeuralNetwork random_network(std::mt19937_64& rng, int in, Activation act,
                             std::vector<int> widths, int out, double scale) {
  std::uniform_real_distribution<double> u(-scale, scale);
  std::vector<Layer> hidden;
  int prev = in;
  for (int wdt : widths) {
    Mat W(wdt, prev);
    Vec b(wdt);
    for (auto& v : W.a) v = u(rng);
    for (auto& v : b) v = u(rng);
    hidden.push_back({std::move(W), std::move(b)});
    prev = wdt;
  }
  Mat W(out, prev);
  Vec b(out);
  for (auto& v : W.a) v = u(rng);
  for (auto& v : b) v = u(rng);
  return NeuralNetwork(std::move(hidden), {std::move(W), std::move(b)}, act);
}

// Evaluation point covering (z, v, phi, u) from a forward trace.
Vec trace_point(const VariableSpace& sp, const NeuralNetwork& nn,
                const NetVars& vars, std::span<const VarId> z_vars,
                std::span<const double> z) {
  Vec pt(sp.size(), 0.0);
  auto t = nn.forward(z);
  for (std::size_t i = 0; i < z_vars.size(); ++i) pt[z_vars[i].index] = z[i];
  for (std::size_t k = 0; k < vars.pre.size(); ++k)
    for (std::size_t i = 0; i < vars.pre[k].size(); ++i) {
      pt[vars.pre[k][i].index] = t.pre[k][i];
      pt[vars.post[k][i].index] = t.post[k][i];
    }
  for (std::size_t i = 0; i < vars.u.size(); ++i)
    pt[vars.u[i].index] = t.output[i];
  return pt;
}

}  // namespace

TEST_CASE("relu constraint tallies") {
  VariableSpace sp;
  auto z = sp.add("z1");
  NeuralNetwork nn({make_layer({{1.0}}, {0.0})}, make_layer({{1.0}}, {0.0}),
                   Activation::ReLU);
  NetVars vars = NetVars::create(sp, nn);
  Box region{{-2.0}, {2.0}};
  IbpBounds b = ibp(nn, region);
  CHECK(b.post[0][0].hi == doctest::Approx(2.0));

  SemialgebraicSet s = relu_constraints(nn, &b, vars);
  std::vector<VarId> zv = {z};
  s.append(affine_layer_equalities(nn, vars, zv));
  // Single node, bounds [0,2]: 4 inequalities, 1 complementarity equality,
  // plus the affine layer equality (and the output row).
  CHECK(s.inequalities.size() == 4);
  CHECK(s.count(ConstraintTag::ReluComplementarity) == 1);
  CHECK(s.count(ConstraintTag::AffineLayer) == 2);  // v row and u row
}

TEST_CASE("relu node proven inactive becomes an equality") {
  VariableSpace sp;
  sp.add("z1");
  NeuralNetwork nn({make_layer({{1.0}}, {-5.0})}, make_layer({{1.0}}, {0.0}),
                   Activation::ReLU);
  NetVars vars = NetVars::create(sp, nn);
  Box region{{-2.0}, {2.0}};
  IbpBounds b = ibp(nn, region);  // pre in [-7,-3] -> post {0}
  SemialgebraicSet s = relu_constraints(nn, &b, vars);
  CHECK(s.count(ConstraintTag::IbpBox) == 1);
  bool found = false;
  for (auto& c : s.equalities)
    if (c.tag == ConstraintTag::IbpBox)
      found = c.p == Polynomial::variable(vars.post[0][0]);
  CHECK(found);
}

TEST_CASE("four hidden nodes give four complementarities") {
  VariableSpace sp;
  sp.add("z1");
  sp.add("z2");
  std::mt19937_64 rng(3);
  NeuralNetwork nn = random_network(rng, 2, Activation::ReLU, {2, 2}, 1, 1.0);
  NetVars vars = NetVars::create(sp, nn);
  SemialgebraicSet s = relu_constraints(nn, nullptr, vars);
  CHECK(s.count(ConstraintTag::ReluComplementarity) == 4);
  CHECK(s.count(ConstraintTag::IbpBox) == 0);  // global mode: no boxes
}

TEST_CASE("tanh sector alpha values") {
  CHECK(tanh_sector_alpha({-1.0, 1.0}) == doctest::Approx(0.761594).epsilon(1e-5));
  CHECK(tanh_sector_alpha({-2.0, 2.0}) == doctest::Approx(0.482014).epsilon(1e-5));
  CHECK(tanh_sector_alpha({-1e-13, 1e-13}) == doctest::Approx(1.0));
  // Interval away from zero keeps the chord anchored at the far endpoint.
  CHECK(tanh_sector_alpha({0.5, 2.0}) == doctest::Approx(std::tanh(2.0) / 2.0));
}

TEST_CASE("tanh sector is sound on samples") {
  Interval pre{-1.7, 0.9};
  double alpha = tanh_sector_alpha(pre);
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(pre.lo, pre.hi);
  for (int i = 0; i < 1000; ++i) {
    double v = u(rng);
    double phi = std::tanh(v);
    CHECK((phi - alpha * v) * (v - phi) >= -1e-12);
  }
}

TEST_CASE("slope constraint tallies") {
  VariableSpace sp;
  sp.add("z1");
  sp.add("z2");
  std::mt19937_64 rng(7);
  SUBCASE("4 nodes all pairs -> C(4,2)") {
    NeuralNetwork nn = random_network(rng, 2, Activation::ReLU, {2, 2}, 1, 1.0);
    NetVars vars = NetVars::create(sp, nn);
    CHECK(slope_constraints(nn, vars, true).inequalities.size() == 6);
    CHECK(slope_constraints(nn, vars, false).inequalities.size() == 2);
  }
  SUBCASE("25 nodes all pairs -> C(25,2)") {
    NeuralNetwork nn =
        random_network(rng, 2, Activation::Tanh, {5, 5, 5, 5, 5}, 1, 0.5);
    NetVars vars = NetVars::create(sp, nn);
    CHECK(slope_constraints(nn, vars, true).inequalities.size() == 300);
    CHECK(slope_constraints(nn, vars, false).inequalities.size() == 50);
  }
}

TEST_CASE("slope constraint sits on the sector boundary for identity phi") {
  VariableSpace sp;
  sp.add("z1");
  NeuralNetwork nn({make_layer({{1.0}, {2.0}}, {0.0, 0.0})},
                   make_layer({{1.0, 1.0}}, {0.0}), Activation::ReLU);
  NetVars vars = NetVars::create(sp, nn);
  SemialgebraicSet s = slope_constraints(nn, vars, true);
  REQUIRE(s.inequalities.size() == 1);
  // With phi == v on both nodes the slope expression is identically zero.
  Vec pt(sp.size(), 0.0);
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int i = 0; i < 50; ++i) {
    double v1 = u(rng), v2 = u(rng);
    pt[vars.pre[0][0].index] = v1;
    pt[vars.post[0][0].index] = v1;
    pt[vars.pre[0][1].index] = v2;
    pt[vars.post[0][1].index] = v2;
    CHECK(s.inequalities[0].p.evaluate(pt) == doctest::Approx(0.0));
  }
}

TEST_CASE("region constraints") {
  VariableSpace sp;
  std::vector<VarId> z = {sp.add("z1"), sp.add("z2"), sp.add("z3")};
  Box cube{{-3, -3, -3}, {3, 3, 3}};
  SemialgebraicSet s = region_constraints(cube, z, sp);
  CHECK(s.region.size() == 6);
  // 3 - z1 >= 0 and 3 + z1 >= 0 style faces.
  Vec pt = {3.0, 0.0, 0.0};
  for (auto& c : s.region) CHECK(c.p.evaluate(pt) >= -1e-12);

  VariableSpace sp2;
  std::vector<VarId> z2 = {sp2.add("z1"), sp2.add("z2")};
  Box pend{{-0.3, -1.4}, {0.3, 1.4}};
  CHECK(region_constraints(pend, z2, sp2).region.size() == 4);

  Polynomial ball = parse_polynomial("1 - z1^2 - z2^2", sp2);
  std::vector<Polynomial> dk = {ball};
  SemialgebraicSet s3 = region_from_polynomials(dk);
  REQUIRE(s3.region.size() == 1);
  CHECK(s3.region[0].p == ball);
}

TEST_CASE("recast sector alpha per the chord formula") {
  double a = recast_alpha_x_minus_sin(-0.3, 0.3);
  CHECK(a == doctest::Approx((0.3 - std::sin(0.3)) / 0.3).epsilon(1e-12));
  CHECK(a == doctest::Approx(0.014933).epsilon(1e-4));
  // Symmetric bounds: both branches agree.
  CHECK(recast_alpha_x_minus_sin(-1.2, 1.2) ==
        doctest::Approx((1.2 - std::sin(1.2)) / 1.2));
  // Degenerate bounds pin the recast variable.
  CHECK(recast_alpha_x_minus_sin(0.0, 0.0) == doctest::Approx(0.0));

  VariableSpace sp;
  auto z1 = sp.add("z1"), z3 = sp.add("z3");
  Polynomial sec = recast_sector_constraint(z3, z1, a);
  // Sound along the true curve z3 = z1 - sin(z1).
  for (int i = -30; i <= 30; ++i) {
    double x = 0.01 * i;
    Vec pt(sp.size(), 0.0);
    pt[z1.index] = x;
    pt[z3.index] = x - std::sin(x);
    CHECK(sec.evaluate(pt) >= -1e-12);
  }
}

TEST_CASE("saturation encodings") {
  VariableSpace sp;
  auto u = sp.add("u1"), w = sp.add("w1");
  SUBCASE("inactive saturation emits w = u") {
    SemialgebraicSet s = saturation_constraints(u, w, 1.0, {-0.8, 0.8});
    CHECK(s.equalities.size() == 1);
    CHECK(s.equalities[0].p == Polynomial::variable(w) - Polynomial::variable(u));
    CHECK(s.inequalities.size() == 2);
  }
  SUBCASE("active saturation uses the kappa sector") {
    SemialgebraicSet s = saturation_constraints(u, w, 1.0, {-2.0, 2.0});
    CHECK(s.equalities.empty());
    REQUIRE(s.inequalities.size() == 3);
    // Sample soundness of sat(u) against the kappa = 0.5 sector on |u| <= 2.
    for (int i = -40; i <= 40; ++i) {
      double uv = 0.05 * i;
      double wv = std::clamp(uv, -1.0, 1.0);
      Vec pt(sp.size(), 0.0);
      pt[u.index] = uv;
      pt[w.index] = wv;
      for (auto& c : s.inequalities) CHECK(c.p.evaluate(pt) >= -1e-12);
    }
  }
  SUBCASE("no saturation -> empty fragment") {
    SemialgebraicSet s = saturation_constraints(
        u, w, std::numeric_limits<double>::infinity(), {-5.0, 5.0});
    CHECK(s.inequalities.empty());
    CHECK(s.equalities.empty());
  }
}

TEST_CASE("robustness constraint") {
  VariableSpace sp;
  auto d = sp.add("delta");
  Polynomial r = robustness_constraint(d, 1.25, 5.0);
  Vec pt(sp.size(), 0.0);
  pt[d.index] = 3.0;
  CHECK(r.evaluate(pt) == doctest::Approx(2.0 * 1.75));
  pt[d.index] = 1.0;
  CHECK(r.evaluate(pt) < 0.0);
  CHECK_THROWS_AS(robustness_constraint(d, 2.0, 2.0), Error);
}

TEST_CASE("abstraction contains the true network graph") {
  std::mt19937_64 rng(41);
  for (Activation act : {Activation::ReLU, Activation::Tanh}) {
    VariableSpace sp;
    std::vector<VarId> z = {sp.add("z1"), sp.add("z2")};
    NeuralNetwork nn = random_network(rng, 2, act, {3, 3}, 1, 0.9);
    NetVars vars = NetVars::create(sp, nn);
    Box region{{-1.0, -1.5}, {1.2, 0.8}};
    IbpBounds b = ibp(nn, region);
    SemialgebraicSet s = act == Activation::ReLU
                             ? relu_constraints(nn, &b, vars)
                             : tanh_sector_constraints(nn, &b, vars);
    s.append(slope_constraints(nn, vars, true));
    s.append(affine_layer_equalities(nn, vars, z));
    s.append(region_constraints(region, z, sp));

    std::uniform_real_distribution<double> u01(0.0, 1.0);
    auto run_samples = [&](const SemialgebraicSet& set, const char* which) {
      CAPTURE(which);
      for (int t = 0; t < 10000; ++t) {
        Vec zs(2);
        for (int i = 0; i < 2; ++i)
          zs[i] = region.lower[i] + u01(rng) * (region.upper[i] - region.lower[i]);
        Vec pt = trace_point(sp, nn, vars, z, zs);
        for (auto& c : set.inequalities)
          REQUIRE(c.p.evaluate(pt) >= -1e-9);
        for (auto& c : set.equalities)
          REQUIRE(std::abs(c.p.evaluate(pt)) <= 1e-9);
        for (auto& c : set.region) REQUIRE(c.p.evaluate(pt) >= -1e-9);
      }
    };
    run_samples(s, "raw");

    // After eliminating the affine rows the set must still contain the graph.
    std::vector<VarId> elim = vars.all_pre();
    for (auto uv : vars.u) elim.push_back(uv);
    Elimination em;
    SemialgebraicSet reduced = eliminate_affine_equalities(s, elim, &em);
    CHECK(reduced.count(ConstraintTag::AffineLayer) == 0);
    CHECK(em.subs.size() == 7);  // 6 pre-activation rows + 1 output row
    run_samples(reduced, "eliminated");
  }
}

TEST_CASE("constraint dump carries provenance tags") {
  VariableSpace sp;
  std::vector<VarId> z = {sp.add("z1")};
  NeuralNetwork nn({make_layer({{1.0}}, {0.0})}, make_layer({{1.0}}, {0.0}),
                   Activation::ReLU);
  NetVars vars = NetVars::create(sp, nn);
  SemialgebraicSet s = relu_constraints(nn, nullptr, vars);
  std::string text = dump_constraints(s, sp);
  CHECK(text.find("relu-sign") != std::string::npos);
  CHECK(text.find("relu-complementarity") != std::string::npos);
  CHECK(text.find(">= 0") != std::string::npos);
}
