#include <cmath>
#include <random>

#include "doctest.h"
#include "fixtures.hpp"
#include "nln/error.hpp"
#include "nln/metrics.hpp"
#include "nln/model.hpp"
#include "nln/postprocess.hpp"
#include "nln/training.hpp"

using namespace nln;

namespace {

// Model with every logical weight 0, a = 1, o = 0.
nln_model blank_model(const schema& s, std::size_t rules) {
  auto m = build_model(s, rules, s.n_outputs(), 1);
  for (std::size_t i = 0; i < m.params.size(); ++i)
    if (is_logical_weight(m.kinds[i])) m.params[i] = 0.0;
  for (std::size_t r = 0; r < rules; ++r) m.and_bias(r) = 1.0;
  for (std::size_t k = 0; k < m.n_outputs; ++k) m.out_bias(k) = 0.0;
  return m;
}

bool all_integral(const nln_model& m) {
  for (std::size_t i = 0; i < m.params.size(); ++i) {
    if (!is_logical_weight(m.kinds[i])) continue;
    const double w = m.params[i];
    if (w != 0.0 && w != 1.0 && w != -1.0) return false;
    if (!is_signed_weight(m.kinds[i]) && w == -1.0) return false;
  }
  return true;
}

nln_model trained(const dataset& d, std::size_t rules, std::uint64_t seed, std::size_t epochs = 30) {
  auto m = build_model(d.schema, rules, d.n_outputs(), seed);
  train_config cfg;
  cfg.seed = seed;
  cfg.max_epochs = epochs;
  cfg.validation_fraction = 0.0;
  fit(m, d, cfg);
  return m;
}

}  // namespace

TEST_CASE("strategy names round-trip") {
  for (auto s : {discretize_strategy::descending_selection, discretize_strategy::subtractive,
                 discretize_strategy::additive, discretize_strategy::ascending_selection})
    CHECK(parse_strategy(to_string(s)) == s);
  CHECK_THROWS(parse_strategy("greedy"));
}

TEST_CASE("every strategy leaves integral logical weights and untouched missing weights") {
  const auto s = fixture::mixed_schema();
  const auto d = fixture::random_rows(s, 120, 3);
  for (auto strat : {discretize_strategy::descending_selection, discretize_strategy::subtractive,
                     discretize_strategy::additive, discretize_strategy::ascending_selection}) {
    auto m = trained(d, 6, 5, 5);
    const auto before = m.params;
    discretize(m, d, strat);
    CHECK(all_integral(m));
    CHECK(m.discretized);
    for (std::size_t i = 0; i < m.params.size(); ++i)
      if (!is_logical_weight(m.kinds[i])) CHECK(m.params[i] == before[i]);
  }
}

TEST_CASE("discretize skips zero weights") {
  auto d = fixture::exhaustive_binary(3, [](const std::vector<int>& b) { return b[0] && b[1]; });
  auto m = blank_model(d.schema, 2);
  m.out_weight(0, 0) = 0.9;
  m.and_weight(0, 0) = 0.8;
  m.and_weight(0, 1) = 0.6;
  discretize(m, d);
  CHECK(m.and_weight(0, 2) == 0.0);
  CHECK(m.out_weight(0, 1) == 0.0);
  CHECK(m.and_weight(0, 0) == 1.0);
  CHECK(m.and_weight(0, 1) == 1.0);
  CHECK(m.out_weight(0, 0) == 1.0);
}

TEST_CASE("descending selection matches brute force on 2-weight toys") {
  // One rule with two AND weights feeding the output. The grid covers both
  // AND weights and the output weight. Losses must agree; weights too when
  // the grid optimum is unique.
  const double starts[][2] = {{0.7, -0.4}, {-0.3, 0.9}, {0.55, 0.5}, {-0.8, -0.2}};
  for (unsigned f = 0; f < 16; ++f) {
    auto d = fixture::exhaustive_binary(2, [f](const std::vector<int>& b) {
      return ((f >> (b[0] + 2 * b[1])) & 1U) != 0;
    });
    for (const auto& st : starts) {
      auto m = blank_model(d.schema, 1);
      m.out_weight(0, 0) = 0.8;
      m.and_weight(0, 0) = st[0];
      m.and_weight(0, 1) = st[1];

      double best = 1e300;
      std::vector<double> best_w;
      int ties = 0;
      for (int i = 0; i < 8; ++i) {
        auto t = m;
        t.and_weight(0, 0) = (i & 1) ? (st[0] > 0 ? 1.0 : -1.0) : 0.0;
        t.and_weight(0, 1) = (i & 2) ? (st[1] > 0 ? 1.0 : -1.0) : 0.0;
        t.out_weight(0, 0) = (i & 4) ? 1.0 : 0.0;
        const double l = data_loss(t, d);
        if (std::abs(l - best) <= 1e-12) {
          ++ties;
        } else if (l < best) {
          best = l;
          ties = 1;
          best_w = {t.and_weight(0, 0), t.and_weight(0, 1), t.out_weight(0, 0)};
        }
      }
      auto g = m;
      discretize(g, d);
      INFO("function " << f << " start " << st[0] << "," << st[1]);
      CHECK(data_loss(g, d) == doctest::Approx(best).epsilon(1e-12));
      if (ties == 1) {
        CHECK(g.and_weight(0, 0) == best_w[0]);
        CHECK(g.and_weight(0, 1) == best_w[1]);
        CHECK(g.out_weight(0, 0) == best_w[2]);
      }
    }
  }
}

TEST_CASE("each descending commit is the better of its two candidates") {
  const auto s = fixture::mixed_schema();
  const auto d = fixture::random_rows(s, 80, 9);
  auto m = trained(d, 4, 2, 5);
  // Replay the output layer by hand and compare with the library.
  auto ref = m;
  std::vector<std::size_t> idx;
  for (std::size_t r = 0; r < m.n_rules; ++r) idx.push_back(m.out_weight_index(0, r));
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return std::abs(ref.params[a]) > std::abs(ref.params[b]); });
  for (std::size_t i : idx) {
    if (ref.params[i] == 0.0) continue;
    auto zero = ref, one = ref;
    zero.params[i] = 0.0;
    one.params[i] = 1.0;
    const double l0 = data_loss(zero, d), l1 = data_loss(one, d);
    ref.params[i] = l1 < l0 - 1e-12 ? 1.0 : 0.0;
    if (std::abs(l1 - l0) <= 1e-12) ref.params[i] = 0.0;
  }
  discretize(m, d);
  for (std::size_t i : idx) CHECK(m.params[i] == ref.params[i]);
}

TEST_CASE("retrain_continuous freezes logical weights and moves a boundary toward the step") {
  auto s = fixture::parse("x continuous 0 1\ny target\n");
  dataset d;
  d.schema = s;
  for (int i = 0; i < 200; ++i) {
    const double x = (i + 0.5) / 200.0;
    d.x.push_back(x);
    d.y.push_back(x > 0.5 ? 1.0 : 0.0);
  }
  d.n_rows = 200;
  model_options opt;
  opt.n_dichotomies = 1;
  auto m = build_model(s, 1, 1, 4, opt);
  for (std::size_t i = 0; i < m.params.size(); ++i)
    if (is_logical_weight(m.kinds[i]) && m.kinds[i] != param_kind::interval_weight) m.params[i] = 0.0;
  // Rule: x lies in the upper interval.
  m.and_weight(0, 0) = 1.0;
  m.params[m.enc_index(0, 0, 1)] = 1.0;
  m.out_weight(0, 0) = 1.0;
  const auto& bl = m.blocks[0];
  m.params[bl.boundary] = 0.3;
  m.params[bl.sharpness] = 10.0;
  const double gap_before = std::abs(m.params[bl.boundary] - 0.5);
  const auto before = m.params;
  auto cfg = retrain_defaults(1);
  cfg.learning_rate = 1e-2;
  const auto rep = retrain_continuous(m, d, cfg);
  CHECK(std::abs(m.params[bl.boundary] - 0.5) < gap_before);
  CHECK(rep.loss_after < rep.loss_before);
  for (std::size_t i = 0; i < m.params.size(); ++i)
    if (is_logical_weight(m.kinds[i])) CHECK(m.params[i] == before[i]);
}

TEST_CASE("prune removes a duplicate rule without changing the loss") {
  auto d = fixture::exhaustive_binary(3, [](const std::vector<int>& b) { return b[0] && !b[2]; });
  auto m = blank_model(d.schema, 2);
  for (std::size_t r = 0; r < 2; ++r) {
    m.and_weight(r, 0) = 1.0;
    m.and_weight(r, 2) = -1.0;
    m.out_weight(0, r) = 1.0;
  }
  const double before = data_loss(m, d);
  const auto rep = prune(m, d);
  CHECK(data_loss(m, d) == doctest::Approx(before).epsilon(1e-15));
  CHECK(rep.rules_after == 1);
  CHECK(m.n_rules == 1);
}

TEST_CASE("prune keeps a weight whose removal raises the loss") {
  auto d = fixture::exhaustive_binary(2, [](const std::vector<int>& b) { return b[0] && b[1]; });
  auto m = blank_model(d.schema, 1);
  m.and_weight(0, 0) = 1.0;
  m.and_weight(0, 1) = 1.0;
  m.out_weight(0, 0) = 1.0;
  prune(m, d);
  CHECK(m.and_weight(0, 0) == 1.0);
  CHECK(m.and_weight(0, 1) == 1.0);
  CHECK(m.out_weight(0, 0) == 1.0);
  CHECK(data_loss(m, d) == 0.0);
}

TEST_CASE("prune reaches a fixpoint") {
  const auto s = fixture::mixed_schema(true);
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const auto d = fixture::random_rows(s, 90, seed);
    auto m = trained(d, 5, seed, 5);
    discretize(m, d);
    prune(m, d);
    const auto once = m;
    const auto rep = prune(m, d);
    CHECK(rep.weights_changed == 0);
    CHECK(m.params == once.params);
    CHECK(m.n_rules == once.n_rules);
    CHECK(m.rule_set == once.rule_set);
  }
}

TEST_CASE("adjust_biases examples") {
  auto d = fixture::exhaustive_binary(3, [](const std::vector<int>& b) { return b[0] && b[1]; });
  SUBCASE("rule firing on positives only gets a = 1, perfect cover gets o = 0") {
    auto m = blank_model(d.schema, 1);
    m.and_weight(0, 0) = 1.0;
    m.and_weight(0, 1) = 1.0;
    m.out_weight(0, 0) = 1.0;
    m.and_bias(0) = 0.4;
    m.out_bias(0) = 0.3;
    adjust_biases(m, d);
    CHECK(m.and_bias(0) == 1.0);
    CHECK(m.out_bias(0) == 0.0);
  }
  SUBCASE("three positives out of four covered rows give 0.75") {
    // x0 covers rows with x0 = 1: four rows; relabel so three are positive.
    auto e = d;
    for (std::size_t r = 0; r < e.n_rows; ++r) {
      const bool x0 = e.value(r, 0) == 1.0, x1 = e.value(r, 1) == 1.0, x2 = e.value(r, 2) == 1.0;
      e.y[r] = (x0 && (x1 || x2)) ? 1.0 : 0.0;
    }
    auto m = blank_model(e.schema, 1);
    m.and_weight(0, 0) = 1.0;
    m.out_weight(0, 0) = 1.0;
    coverage_stats cs;
    adjust_biases(m, e, &cs);
    CHECK(cs.mass_pos[0] == 3.0);
    CHECK(cs.mass_total[0] == 4.0);
    CHECK(m.and_bias(0) == 0.75);
    // Uncovered mass: 0.25 on each covered row (three positive), 1 on each
    // of the four uncovered rows, all negative: 0.75 / 5.
    CHECK(m.out_bias(0) == doctest::Approx(0.15));
  }
  SUBCASE("rule covering nothing keeps its bias") {
    auto m = blank_model(d.schema, 1);
    m.and_weight(0, 0) = 1.0;
    m.and_weight(0, 1) = 1.0;
    m.out_weight(0, 0) = 1.0;
    m.and_bias(0) = 0.5;
    auto e = d;
    for (std::size_t r = 0; r < e.n_rows; ++r) e.x[r * 3] = 0.0;  // x0 never true
    const auto rep = adjust_biases(m, e);
    CHECK(m.and_bias(0) == 0.5);
    CHECK(rep.warnings >= 1);
  }
}

TEST_CASE("adjust_biases splits a rule shared by two targets") {
  auto s = fixture::parse("a binary\nb binary\nu target\nv target\n");
  dataset d;
  d.schema = s;
  for (int r = 0; r < 4; ++r) {
    const int a = r & 1, b = (r >> 1) & 1;
    d.x.insert(d.x.end(), {double(a), double(b)});
    d.y.insert(d.y.end(), {double(a && b), double(a)});
  }
  d.n_rows = 4;
  auto m = blank_model(s, 1);
  m.and_weight(0, 0) = 1.0;
  m.out_weight(0, 0) = 1.0;
  m.out_weight(1, 0) = 1.0;
  adjust_biases(m, d);
  REQUIRE(m.n_rules == 2);
  CHECK(m.out_weight(0, 0) == 1.0);
  CHECK(m.out_weight(1, 0) == 0.0);
  CHECK(m.out_weight(1, 1) == 1.0);
  CHECK(m.and_bias(0) == 0.5);
  CHECK(m.and_bias(1) == 1.0);
}

TEST_CASE("adjust_biases keeps every bias in [0,1]") {
  const auto s = fixture::mixed_schema(true);
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto d = fixture::random_rows(s, 70, seed + 20);
    auto m = trained(d, 5, seed, 3);
    adjust_biases(m, d);
    for (std::size_t r = 0; r < m.n_rules; ++r) {
      CHECK(m.and_bias(r) >= 0.0);
      CHECK(m.and_bias(r) <= 1.0);
    }
    for (std::size_t k = 0; k < m.n_outputs; ++k) {
      CHECK(m.out_bias(k) >= 0.0);
      CHECK(m.out_bias(k) <= 1.0);
    }
  }
}

TEST_CASE("inclusion score") {
  CHECK(inclusion_score({1.0, 0.0}, {0.25, 1.0}) == doctest::Approx(0.5));
  CHECK(inclusion_score({0.0, 0.0}, {0.3, 1.0}) == 1.0);
  CHECK(inclusion_score({1.0, 0.0, 1.0}, {1.0, 1.0, 1.0}) == 1.0);
  CHECK(inclusion_score({1.0, 1.0, 1.0}, {1.0, 0.0, 1.0}) == doctest::Approx(2.0 / 3.0));
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0, 1);
  for (int t = 0; t < 200; ++t) {
    std::vector<double> a(7), b(7);
    for (auto& v : a) v = u(rng);
    for (auto& v : b) v = u(rng);
    CHECK(inclusion_score(a, a) == doctest::Approx(1.0).epsilon(1e-12));
    const double e = inclusion_score(a, b);
    CHECK(e >= 0.0);
    CHECK(e <= 1.0);
  }
}

TEST_CASE("eliminate_included_rules") {
  auto d = fixture::exhaustive_binary(3, [](const std::vector<int>& b) { return b[0] != 0; });
  auto make = [&](double a0, double a1) {
    auto m = blank_model(d.schema, 2);
    m.and_weight(0, 0) = 1.0;
    m.and_weight(1, 0) = 1.0;
    m.out_weight(0, 0) = 1.0;
    m.out_weight(0, 1) = 1.0;
    m.and_bias(0) = a0;
    m.and_bias(1) = a1;
    return m;
  };
  SUBCASE("identical rules with equal biases both stay") {
    auto m = make(0.9, 0.9);
    eliminate_included_rules(m, d);
    CHECK(m.n_rules == 2);
  }
  SUBCASE("identical rules, the lower bias goes") {
    auto m = make(0.8, 0.9);
    eliminate_included_rules(m, d);
    REQUIRE(m.n_rules == 1);
    CHECK(m.and_bias(0) == 0.9);
  }
  SUBCASE("crisp subset rule with a lower bias goes") {
    auto m = make(0.7, 1.0);
    m.and_weight(0, 1) = 1.0;  // x0 and x1 is inside x0
    const auto f1_before = [&] {
      auto t = m;
      fit_thresholds(t, d);
      return evaluate(t, d).f1;
    }();
    eliminate_included_rules(m, d);
    REQUIRE(m.n_rules == 1);
    CHECK(m.and_weight(0, 1) == 0.0);
    fit_thresholds(m, d);
    CHECK(evaluate(m, d).f1 == f1_before);
  }
}

TEST_CASE("merging a model with itself keeps its f1") {
  const auto d = fixture::exhaustive_binary(4, [](const std::vector<int>& b) {
    return (b[0] && !b[1]) || (b[2] && b[3]);
  });
  auto m = blank_model(d.schema, 2);
  m.and_weight(0, 0) = 1.0;
  m.and_weight(0, 1) = -1.0;
  m.and_weight(1, 2) = 1.0;
  m.and_weight(1, 3) = 1.0;
  m.out_weight(0, 0) = 1.0;
  m.out_weight(0, 1) = 1.0;
  fit_thresholds(m, d);
  const double f1 = evaluate(m, d).f1;
  auto merged = merge_models({m, m}, d);
  CHECK(evaluate(merged, d).f1 == f1);
  CHECK(active_rules(merged).size() == 2);
  CHECK_THROWS_AS(merge_models({}, d), precondition_error);
}

TEST_CASE("merge of disjoint rules covers the union before pruning") {
  const auto d = fixture::exhaustive_binary(3, [](const std::vector<int>& b) { return b[0] || b[1]; });
  auto a = blank_model(d.schema, 1), b = blank_model(d.schema, 1);
  a.and_weight(0, 0) = 1.0;
  a.out_weight(0, 0) = 1.0;
  b.and_weight(0, 1) = 1.0;
  b.out_weight(0, 0) = 1.0;
  const auto both = concatenate({a, b});
  const auto pa = output_matrix(a, d), pb = output_matrix(b, d), pu = output_matrix(both, d);
  for (std::size_t r = 0; r < d.n_rows; ++r) CHECK(pu[r] >= std::max(pa[r], pb[r]));
}

TEST_CASE("find_minimal_subset") {
  const auto d = fixture::exhaustive_binary(4, [](const std::vector<int>& b) {
    return (b[0] && b[1]) || (b[2] && b[3]);
  });
  auto m = blank_model(d.schema, 3);
  m.and_weight(0, 0) = 1.0;
  m.and_weight(0, 1) = 1.0;
  m.and_weight(1, 2) = 1.0;
  m.and_weight(1, 3) = 1.0;
  m.and_weight(2, 0) = 1.0;  // noisy extra rule
  for (std::size_t r = 0; r < 3; ++r) m.out_weight(0, r) = 1.0;
  m.and_bias(2) = 0.3;
  fit_thresholds(m, d);
  const double full = evaluate(m, d).f1;
  auto res = find_minimal_subset(m, d, 3);
  CHECK_FALSE(res.approximate);
  REQUIRE(!res.ranked.empty());
  CHECK(res.ranked.front().f1 == 1.0);
  CHECK(res.ranked.front().rules == std::vector<std::size_t>{0, 1});
  bool saw_full = false;
  for (const auto& r : find_minimal_subset(m, d, 3, 100).ranked)
    if (r.rules.size() == 3) {
      saw_full = true;
      CHECK(r.f1 == full);
    }
  CHECK(saw_full);
}

TEST_CASE("postprocess pipeline on a learnable task") {
  const auto d = fixture::exhaustive_binary(4, [](const std::vector<int>& b) {
    return (b[0] && !b[1]) || b[3];
  });
  auto m = trained(d, 8, 3, 300);
  const auto reps = postprocess(m, d);
  CHECK(reps.size() == 5);
  CHECK(m.postprocessed);
  CHECK(all_integral(m));
  fit_thresholds(m, d);
  CHECK(evaluate(m, d).f1 == 1.0);
}
