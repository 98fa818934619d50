#include <cmath>
#include <random>

#include "doctest.h"
#include "nln/error.hpp"
#include "nln/nodes.hpp"
#include "oracles.hpp"

using namespace nln;

TEST_CASE("and_forward examples") {
  CHECK(and_forward({{1, -1}, 1.0}, {1, 0}) == 1.0);
  CHECK(and_forward({{1}, 1.0}, {0.5}) == 0.5);
  CHECK(and_forward({{1, -0.5}, 0.8}, {0.9, 0.4}) == doctest::Approx(0.8 * 0.9 * 0.8).epsilon(1e-15));
  CHECK(and_forward({{}, 0.37}, {}) == 0.37);
  CHECK_THROWS_AS(and_forward({{1, 1}, 1.0}, {0.5}), dimension_error);
}

TEST_CASE("or_forward examples") {
  CHECK(or_forward({{1}, 0.0, true}, {0.3}) == doctest::Approx(0.3).epsilon(1e-15));
  CHECK(or_forward({{0.4, -0.7}, 1.0, true}, {0.2, 0.9}) == 1.0);
  CHECK(or_forward({{0.5, -1}, 0.2, true}, {0.6, 0.3}) ==
        doctest::Approx(1 - 0.8 * 0.7 * 0.3).epsilon(1e-15));
  CHECK(or_forward({{}, 0.25, true}, {}) == 0.25);
  CHECK_THROWS_AS(or_forward({{-0.5}, 0.0, false}, {0.5}), domain_error);
  CHECK_THROWS_AS(or_forward({{1}, 0.0, true}, {0.5, 0.5}), dimension_error);
}

TEST_CASE("node_backward examples") {
  auto g = node_backward(and_node{{1}, 1.0}, {0.5}, 1.0);
  CHECK(g.d_bias == doctest::Approx(0.5));
  CHECK(g.d_weights[0] == doctest::Approx(-0.5));
  CHECK(g.d_inputs[0] == doctest::Approx(1.0));

  auto z = node_backward(and_node{{0}, 1.0}, {0.5}, 1.0);
  CHECK(z.d_weights[0] == 0.0);

  auto o = node_backward(or_node{{1}, 0.0, true}, {0.3}, 1.0);
  CHECK(o.d_bias == doctest::Approx(0.7));
  CHECK(o.d_weights[0] == doctest::Approx(0.3));
  CHECK(o.d_inputs[0] == doctest::Approx(1.0));
  CHECK_THROWS_AS(node_backward(and_node{{1}, 1.0}, {0.5, 0.1}, 1.0), dimension_error);
}

TEST_CASE("subgradient at zero is the sum of one-sided slopes") {
  const double c = 0.8, h = 1e-7;
  and_node n{{0.0, 0.6}, 0.9};
  auto g = node_backward(n, {c, 0.3}, 1.0);
  auto at = [&](double w) { return and_forward({{w, 0.6}, 0.9}, {c, 0.3}); };
  const double right = (at(h) - at(0)) / h, left = (at(0) - at(-h)) / h;
  CHECK(g.d_weights[0] == doctest::Approx(right + left).epsilon(1e-5));

  or_node o{{0.0, 0.4}, 0.1, true};
  auto go = node_backward(o, {c, 0.3}, 1.0);
  auto ot = [&](double w) { return or_forward({{w, 0.4}, 0.1, true}, {c, 0.3}); };
  CHECK(go.d_weights[0] == doctest::Approx((ot(h) - ot(0)) / h + (ot(0) - ot(-h)) / h).epsilon(1e-5));
}

TEST_CASE("demorgan dual") {
  and_node a{{0.7, -0.2}, 0.3};
  auto d = demorgan_dual(a);
  CHECK(d.bias == doctest::Approx(0.7));
  CHECK(d.weights[0] == -0.7);
  CHECK(d.weights[1] == 0.2);
  auto back = demorgan_dual(d);
  CHECK(back.weights == a.weights);
  CHECK(back.bias == doctest::Approx(a.bias).epsilon(1e-15));
  // 0.3 * (1 - 0.7*0.5) * (1 - 0.2*0.5)
  CHECK(and_forward(a, {0.5, 0.5}) == doctest::Approx(0.1755).epsilon(1e-12));
  CHECK(or_forward(d, {0.5, 0.5}) == doctest::Approx(0.8245).epsilon(1e-12));
}

TEST_CASE("crisp_eval examples") {
  CHECK(crisp_eval(and_node{{1, -1, 0}, 1.0}, {1, 0, 1}) == 1);
  CHECK(crisp_eval(and_node{{1, -1, 0}, 1.0}, {1, 1, 0}) == 0);
  CHECK(crisp_eval(or_node{{1, 0, 1}, 0.0, true}, {0, 1, 0}) == 0);
  CHECK_THROWS_AS(crisp_eval(and_node{{0.5}, 1.0}, {1}), precondition_error);
  CHECK_THROWS_AS(crisp_eval(and_node{{1}, 1.0}, {2}), precondition_error);
}

TEST_CASE("property: binary collapse, range and monotonicity") {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> w3(-1, 1), bit(0, 1), fan(0, 8);
  std::uniform_real_distribution<double> u(0, 1), s(-1, 1);
  for (int t = 0; t < 500; ++t) {
    const int n = fan(rng);
    and_node a{{}, 1.0};
    or_node o{{}, 0.0, true};
    std::vector<int> xi;
    std::vector<double> xd;
    for (int j = 0; j < n; ++j) {
      a.weights.push_back(w3(rng));
      o.weights.push_back(w3(rng));
      xi.push_back(bit(rng));
      xd.push_back(xi.back());
    }
    CHECK(and_forward(a, xd) == static_cast<double>(oracle::crisp_and(a.weights, xi)));
    CHECK(or_forward(o, xd) == static_cast<double>(oracle::crisp_or(o.weights, xi)));

    and_node fa{{}, u(rng)};
    or_node fo{{}, u(rng), true};
    std::vector<double> c;
    for (int j = 0; j < n; ++j) {
      fa.weights.push_back(s(rng));
      fo.weights.push_back(s(rng));
      c.push_back(u(rng));
    }
    const double va = and_forward(fa, c), vo = or_forward(fo, c);
    CHECK(va >= 0.0);
    CHECK(va <= 1.0);
    CHECK(vo >= 0.0);
    CHECK(vo <= 1.0);
    if (n > 0) {
      auto up = c;
      up[0] = std::min(1.0, c[0] + 0.1);
      const double da = and_forward(fa, up) - va, dor = or_forward(fo, up) - vo;
      if (fa.weights[0] > 0) CHECK(da >= -1e-15);
      if (fa.weights[0] < 0) CHECK(da <= 1e-15);
      if (fo.weights[0] > 0) CHECK(dor >= -1e-15);
      if (fo.weights[0] < 0) CHECK(dor <= 1e-15);
    }
  }
}

TEST_CASE("property: node gradients match central differences") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.05, 0.95), mag(0.01, 0.99);
  std::bernoulli_distribution sign(0.5);
  const double h = 1e-5;
  for (int t = 0; t < 200; ++t) {
    const int n = 1 + t % 5;
    and_node a{{}, u(rng)};
    or_node o{{}, u(rng), true};
    std::vector<double> c;
    for (int j = 0; j < n; ++j) {
      a.weights.push_back(sign(rng) ? mag(rng) : -mag(rng));
      o.weights.push_back(sign(rng) ? mag(rng) : -mag(rng));
      c.push_back(u(rng));
    }
    auto ga = node_backward(a, c, 1.0);
    auto go = node_backward(o, c, 1.0);
    for (int j = 0; j < n; ++j) {
      auto pa = a, ma = a;
      pa.weights[j] += h;
      ma.weights[j] -= h;
      CHECK(oracle::rel_err(ga.d_weights[j], (and_forward(pa, c) - and_forward(ma, c)) / (2 * h)) < 1e-4);
      auto po = o, mo = o;
      po.weights[j] += h;
      mo.weights[j] -= h;
      CHECK(oracle::rel_err(go.d_weights[j], (or_forward(po, c) - or_forward(mo, c)) / (2 * h)) < 1e-4);
      auto cp = c, cm = c;
      cp[j] += h;
      cm[j] -= h;
      CHECK(oracle::rel_err(ga.d_inputs[j], (and_forward(a, cp) - and_forward(a, cm)) / (2 * h)) < 1e-4);
      CHECK(oracle::rel_err(go.d_inputs[j], (or_forward(o, cp) - or_forward(o, cm)) / (2 * h)) < 1e-4);
    }
  }
}
