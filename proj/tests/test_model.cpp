#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "doctest.h"
#include "fixtures.hpp"
#include "nln/error.hpp"
#include "nln/model.hpp"
#include "oracles.hpp"

using namespace nln;

namespace {

std::string cells_schema(int n, const std::string& values, const std::string& target) {
  std::string s;
  for (int i = 0; i < n; ++i) s += "f" + std::to_string(i) + " " + values + "\n";
  return s + target;
}

}  // namespace

TEST_CASE("model size matches the published capacities") {
  // tic-tac-toe: 9 categoricals with 3 values, one binary target
  auto ttt = build_model(fixture::parse(cells_schema(9, "categorical x o b", "y target\n")), 128, 1, 0);
  CHECK(ttt.preprocessing_nodes() == 1152);
  CHECK(ttt.parameter_count() == 4865);

  // chess: 35 binary plus one 3-valued categorical
  auto chess = build_model(
      fixture::parse(cells_schema(35, "binary", "") + "wknck categorical a b c\ny target\n"), 128, 1, 0);
  CHECK(chess.preprocessing_nodes() == 128);
  CHECK(chess.parameter_count() == 5249);

  auto monk = build_model(fixture::parse("a1 categorical 1 2 3\na2 categorical 1 2 3\n"
                                         "a3 categorical 1 2\na4 categorical 1 2 3\n"
                                         "a5 categorical 1 2 3 4\na6 categorical 1 2\ny target\n"),
                          128, 1, 0);
  CHECK(monk.preprocessing_nodes() == 768);
  CHECK(monk.parameter_count() == 3201);

  auto wine = build_model(
      fixture::parse(cells_schema(13, "continuous 0 1", "y class a b c\n")), 128, 3, 0);
  CHECK(wine.preprocessing_nodes() == 2509);
  CHECK(wine.parameter_count() == 71651);

  auto bal_con = build_model(
      fixture::parse(cells_schema(4, "continuous 1 5", "y class l b r\n")), 128, 3, 0);
  CHECK(bal_con.preprocessing_nodes() == 772);
  CHECK(bal_con.parameter_count() == 22403);
  auto bal_cat = build_model(
      fixture::parse(cells_schema(4, "categorical 1 2 3 4 5", "y class l b r\n")), 128, 3, 0);
  CHECK(bal_cat.preprocessing_nodes() == 512);
  CHECK(bal_cat.parameter_count() == 3587);

  // adult: sex binary; workclass, occupation and country carry missing values
  auto v = [](int n) {
    std::string s;
    for (int i = 0; i < n; ++i) s += " v" + std::to_string(i);
    return s;
  };
  std::string adult = "sex binary\nworkclass categorical" + v(8) + " missing\neducation categorical" +
                      v(16) + "\nmarital categorical" + v(7) + "\noccupation categorical" + v(14) +
                      " missing\nrelationship categorical" + v(6) + "\nrace categorical" + v(5) +
                      "\ncountry categorical" + v(41) + " missing\n" +
                      cells_schema(6, "continuous 0 1", "y target\n");
  auto ad = build_model(fixture::parse(adult), 128, 1, 0);
  CHECK(ad.preprocessing_nodes() == 2054);
  CHECK(ad.parameter_count() == 46913);

  auto tiny = build_model(fixture::parse("a binary\ny target\n"), 1, 1, 0);
  CHECK(tiny.parameter_count() == 4);
  CHECK_THROWS_AS(build_model(fixture::parse("y target\n"), 1, 1, 0), schema_error);
  CHECK_THROWS_AS(build_model(fixture::parse("a binary\ny target\n"), 0, 1, 0), precondition_error);
}

TEST_CASE("initialization") {
  auto s = fixture::mixed_schema(true);
  auto a = build_model(s, 16, 3, 42), b = build_model(s, 16, 3, 42), c = build_model(s, 16, 3, 43);
  CHECK(a.params == b.params);
  CHECK(a.params != c.params);
  for (std::size_t r = 0; r < a.n_rules; ++r) CHECK(a.and_bias(r) == 1.0);
  for (std::size_t k = 0; k < a.n_outputs; ++k) CHECK(a.out_bias(k) == 0.0);
  for (std::size_t i = 0; i < a.params.size(); ++i) {
    double v = a.params[i];
    switch (a.kinds[i]) {
      case param_kind::and_weight: CHECK((v >= -1 && v <= 1)); break;
      case param_kind::class_weight:
      case param_kind::interval_choice:
      case param_kind::missing_weight:
      case param_kind::out_weight: CHECK((v >= 0 && v <= 1)); break;
      default: break;
    }
  }
}

TEST_CASE("model_forward matches the node-by-node oracle") {
  for (bool mc : {false, true}) {
    auto s = fixture::mixed_schema(mc);
    auto m = build_model(s, 7, s.n_outputs(), 3);
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-1, 1);
    for (std::size_t i = 0; i < m.params.size(); ++i)
      if (m.kinds[i] == param_kind::interval_weight) m.params[i] = u(rng) * 0.3;
    m.out_bias(0) = 0.1;
    auto d = fixture::random_rows(s, 200, 5, 0.2);
    for (std::size_t r = 0; r < d.n_rows; ++r) {
      auto got = model_forward(m, d.row(r));
      auto want = oracle::model_forward(m, d.row(r));
      for (std::size_t k = 0; k < got.size(); ++k) CHECK(got[k] == doctest::Approx(want[k]).epsilon(1e-12));
    }
  }
}

TEST_CASE("model_forward examples") {
  auto s = fixture::parse("a binary\nb binary\ny class u v\n");
  auto m = build_model(s, 3, 2, 1);
  for (std::size_t r = 0; r < 3; ++r) m.and_bias(r) = 0.0;
  m.out_bias(0) = m.out_bias(1) = 0.3;
  std::vector<double> row{1, 0};
  for (double p : model_forward(m, row.data())) CHECK(p == doctest::Approx(0.3));

  auto one = build_model(fixture::parse("a binary\ny target\n"), 1, 1, 1);
  one.and_weight(0, 0) = 1;
  one.and_bias(0) = 1;
  one.out_weight(0, 0) = 1;
  one.out_bias(0) = 0;
  std::vector<double> hit{1};
  CHECK(model_forward(one, hit.data())[0] == 1.0);
}

TEST_CASE("predict") {
  auto s = fixture::parse("a binary\ny class p q r\n");
  auto m = build_model(s, 1, 3, 0);
  CHECK(predict(m, {0.2, 0.9, 0.9}) == std::vector<int>{1});
  auto b = build_model(fixture::parse("a binary\ny target\n"), 1, 1, 0);
  CHECK_THROWS_AS(predict(b, {0.5}), threshold_error);
  b.thresholds = {0.51};
  CHECK(predict(b, {0.51}) == std::vector<int>{1});
  CHECK(predict(b, {0.50}) == std::vector<int>{0});
}

TEST_CASE("property: rule modules are exchangeable") {
  auto s = fixture::mixed_schema(true);
  auto m = build_model(s, 9, 3, 8);
  auto d = fixture::random_rows(s, 60, 2);
  std::vector<std::size_t> perm(9);
  for (std::size_t i = 0; i < 9; ++i) perm[i] = (i * 4 + 3) % 9;
  auto p = keep_rules(m, perm);
  for (std::size_t r = 0; r < d.n_rows; ++r) {
    auto a = model_forward(m, d.row(r)), b = model_forward(p, d.row(r));
    for (std::size_t k = 0; k < a.size(); ++k) CHECK(a[k] == doctest::Approx(b[k]).epsilon(1e-13));
  }
}

TEST_CASE("property: crisp model equals its logic program") {
  std::mt19937_64 rng(21);
  std::uniform_int_distribution<int> w3(-1, 1), bit(0, 1), w2(0, 1);
  auto s = fixture::parse("a binary\nb binary\nc binary\nd binary\ne binary\ny1 target\ny2 target\n");
  for (int t = 0; t < 100; ++t) {
    auto m = build_model(s, 4, 2, static_cast<std::uint64_t>(t));
    for (std::size_t r = 0; r < 4; ++r) {
      m.and_bias(r) = 1.0;
      for (std::size_t j = 0; j < 5; ++j) m.and_weight(r, j) = w3(rng);
    }
    for (std::size_t k = 0; k < 2; ++k) {
      m.out_bias(k) = 0.0;
      for (std::size_t r = 0; r < 4; ++r) m.out_weight(k, r) = w2(rng);
    }
    for (int x = 0; x < 32; ++x) {
      std::vector<double> row(5);
      std::vector<int> bits(5);
      for (int j = 0; j < 5; ++j) row[j] = bits[j] = (x >> j) & 1;
      auto out = model_forward(m, row.data());
      for (std::size_t k = 0; k < 2; ++k) {
        int fired = 0;
        for (std::size_t r = 0; r < 4; ++r) {
          std::vector<double> w(5);
          for (int j = 0; j < 5; ++j) w[j] = m.and_weight(r, j);
          if (m.out_weight(k, r) == 1.0 && oracle::crisp_and(w, bits)) fired = 1;
        }
        CHECK(out[k] == static_cast<double>(fired));
      }
    }
  }
}

TEST_CASE("model file round trip is exact") {
  auto s = fixture::mixed_schema(true);
  auto m = build_model(s, 5, 3, 77);
  m.thresholds = {};
  m.params[3] = 1.0 / 3.0;
  std::ostringstream a;
  save_model(a, m);
  std::istringstream in(a.str());
  auto back = load_model(in);
  std::ostringstream b;
  save_model(b, back);
  CHECK(a.str() == b.str());
  CHECK(back.params == m.params);
  CHECK(back.kinds == m.kinds);

  auto bin = build_model(fixture::mixed_schema(false), 2, 1, 1);
  bin.thresholds = {0.37};
  bin.discretized = true;
  std::ostringstream c;
  save_model(c, bin);
  std::istringstream ci(c.str());
  auto bb = load_model(ci);
  CHECK(bb.thresholds == bin.thresholds);
  CHECK(bb.discretized);
  std::istringstream junk("not a model\n");
  CHECK_THROWS_AS(load_model(junk), format_error);
}

TEST_CASE("concatenate keeps each model's encoders") {
  auto s = fixture::mixed_schema(false);
  auto a = build_model(s, 3, 1, 1), b = build_model(s, 2, 1, 2);
  b.params[b.blocks[0].boundary] += 0.7;  // encoders now differ
  a.out_bias(0) = 0.0;
  b.out_bias(0) = 0.0;
  auto m = concatenate({a, b});
  CHECK(m.n_rules == 5);
  CHECK(m.n_sets == 2);
  auto d = fixture::random_rows(s, 40, 3);
  for (std::size_t r = 0; r < d.n_rows; ++r) {
    // the merged OR equals 1 - (1 - a)(1 - b) when biases are 0
    const double pa = model_forward(a, d.row(r))[0], pb = model_forward(b, d.row(r))[0];
    CHECK(model_forward(m, d.row(r))[0] == doctest::Approx(1 - (1 - pa) * (1 - pb)).epsilon(1e-12));
    auto o = oracle::model_forward(m, d.row(r));
    CHECK(model_forward(m, d.row(r))[0] == doctest::Approx(o[0]).epsilon(1e-12));
  }
  auto k = keep_rules(m, {3, 4});
  CHECK(k.n_sets == 1);
  for (std::size_t r = 0; r < d.n_rows; ++r)
    CHECK(model_forward(k, d.row(r))[0] == doctest::Approx(model_forward(b, d.row(r))[0]).epsilon(1e-12));
  auto other = build_model(fixture::parse("z binary\ny target\n"), 1, 1, 0);
  CHECK_THROWS_AS(concatenate({a, other}), schema_error);
}
