#include <cmath>
#include <random>

#include "doctest.h"
#include "fixtures.hpp"
#include "nln/engine.hpp"
#include "nln/error.hpp"
#include "nln/model.hpp"
#include "nln/training.hpp"
#include "oracles.hpp"

using namespace nln;

namespace {

// Moves every weight at least `gap` away from 0 so that finite differences
// do not straddle the |w| kink.
void push_off_kinks(nln_model& m, double gap) {
  for (std::size_t i = 0; i < m.params.size(); ++i) {
    if (!is_logical_weight(m.kinds[i])) continue;
    double& w = m.params[i];
    if (std::abs(w) < gap) w = w < 0 ? -gap : gap;
  }
}

double max_grad_error(nln_model m, const dataset& d, const train_config& cfg) {
  std::vector<double> grad;
  loss_and_gradient(m, d, cfg, {}, grad);
  double worst = 0.0;
  const double h = 1e-5;
  for (std::size_t i = 0; i < m.params.size(); ++i) {
    const double keep = m.params[i];
    m.params[i] = keep + h;
    const double up = compute_loss(m, d, cfg).total;
    m.params[i] = keep - h;
    const double down = compute_loss(m, d, cfg).total;
    m.params[i] = keep;
    const double fd = (up - down) / (2 * h);
    if (std::abs(fd) < 1e-9 && std::abs(grad[i]) < 1e-9) continue;
    worst = std::max(worst, oracle::rel_err(grad[i], fd));
  }
  return worst;
}

}  // namespace

TEST_CASE("compute_loss terms") {
  auto s = fixture::parse("a binary\ny target\n");
  auto m = build_model(s, 1, 1, 0);
  m.and_weight(0, 0) = 0.4;
  m.out_weight(0, 0) = 1.0;
  dataset d;
  d.schema = s;
  d.n_rows = 1;
  d.x = {1};
  d.y = {model_forward(m, d.x.data())[0]};
  train_config cfg;
  auto lb = compute_loss(m, d, cfg);
  CHECK(lb.l2 == 0.0);
  // AND node sum |A| = 0.4 gives (1 - 0.4)^2, output OR sum = 1 gives 0
  CHECK(lb.nonempty == doctest::Approx(0.36));
  CHECK(lb.sparsity == doctest::Approx(1.4));
  CHECK(lb.total == lb.l2 + cfg.lambda_nonempty * lb.nonempty + cfg.lambda_sparsity * lb.sparsity);
  m.and_weight(0, 0) = -1.2;  // out of domain on purpose: the hinge is inactive
  CHECK(compute_loss(m, d, cfg).nonempty == doctest::Approx(0.0));
}

TEST_CASE("property: loss identity and gradient against finite differences") {
  train_config cfg;
  for (int t = 0; t < 4; ++t) {
    auto s = fixture::mixed_schema(t % 2 == 1);
    model_options opt;
    opt.n_dichotomies = 3;
    auto m = build_model(s, 2, s.n_outputs(), static_cast<std::uint64_t>(t), opt);
    std::mt19937_64 rng(t);
    std::uniform_real_distribution<double> u(-0.9, 0.9), p(0.05, 0.95);
    for (std::size_t i = 0; i < m.params.size(); ++i) {
      switch (m.kinds[i]) {
        case param_kind::interval_weight: m.params[i] = u(rng); break;
        case param_kind::and_bias:
        case param_kind::out_bias: m.params[i] = p(rng); break;
        default: break;
      }
    }
    push_off_kinks(m, 1e-3);
    auto d = fixture::random_rows(s, 30, static_cast<std::uint64_t>(t + 10), 0.15);
    auto lb = compute_loss(m, d, cfg);
    CHECK(lb.total == lb.l2 + cfg.lambda_nonempty * lb.nonempty + cfg.lambda_sparsity * lb.sparsity);
    CHECK(max_grad_error(m, d, cfg) < 1e-4);
  }
}

TEST_CASE("adam on a one-parameter quadratic") {
  std::vector<double> w{2.0};
  adam_state st;
  double prev = (w[0] - 0.5) * (w[0] - 0.5);
  const double start = prev;
  for (int i = 0; i < 100; ++i) {
    std::vector<double> g{2 * (w[0] - 0.5)};
    adam_update(w, g, st, 0.05);
  }
  CHECK((w[0] - 0.5) * (w[0] - 0.5) < start);
  CHECK(std::abs(w[0] - 0.5) < 0.5);
}

TEST_CASE("train_step projection and zero gradient") {
  auto s = fixture::mixed_schema(true);
  auto m = build_model(s, 6, 3, 1);
  auto d = fixture::random_rows(s, 50, 2);
  train_config cfg;
  cfg.learning_rate = 0.5;  // large steps hit the domain edges
  adam_state st;
  std::vector<std::size_t> batch{0, 1, 2, 3, 4, 5, 6, 7};
  for (int i = 0; i < 20; ++i) {
    train_step(m, d, batch, st, cfg);
    for (std::size_t j = 0; j < m.params.size(); ++j) {
      const double v = m.params[j];
      switch (m.kinds[j]) {
        case param_kind::and_weight:
        case param_kind::interval_weight: CHECK((v >= -1 && v <= 1)); break;
        case param_kind::boundary: break;
        case param_kind::sharpness: CHECK(v >= m.options.sharpness_min); break;
        default: CHECK((v >= 0 && v <= 1)); break;
      }
    }
  }
  std::vector<double> x{1.0, 0.3}, zero{0.0, 0.0};
  adam_state fresh;
  adam_update(x, zero, fresh, 0.1);
  CHECK(x == std::vector<double>{1.0, 0.3});
}

TEST_CASE("continuous-only steps freeze logical weights") {
  auto s = fixture::mixed_schema(false);
  auto m = build_model(s, 4, 1, 2);
  auto d = fixture::random_rows(s, 40, 3);
  auto before = m.params;
  train_config cfg;
  cfg.continuous_only = true;
  adam_state st;
  for (int i = 0; i < 5; ++i) train_step(m, d, {0, 1, 2, 3, 4, 5}, st, cfg);
  bool moved = false;
  for (std::size_t i = 0; i < m.params.size(); ++i) {
    if (is_logical_weight(m.kinds[i]))
      CHECK(m.params[i] == before[i]);
    else if (m.params[i] != before[i])
      moved = true;
  }
  CHECK(moved);
}

TEST_CASE("reset_dead_rules never changes outputs") {
  auto s = fixture::mixed_schema(true);
  auto d = fixture::random_rows(s, 80, 4, 0.2);
  for (int t = 0; t < 10; ++t) {
    auto m = build_model(s, 8, 3, static_cast<std::uint64_t>(t));
    m.and_bias(0) = 0.0;                                   // dead by bias
    for (std::size_t k = 0; k < 3; ++k) m.out_weight(k, 1) = 0.0;  // dead by outgoing weights
    m.and_bias(2) = 1.0;
    m.out_weight(0, 2) = 0.5;
    auto before = m;
    const std::size_t n = reset_dead_rules(m, 1e-3, 99);
    CHECK(n >= 2);
    CHECK(m.and_bias(0) == 1.0);
    for (std::size_t k = 0; k < 3; ++k) CHECK(m.out_weight(k, 0) == 0.0);
    CHECK(m.out_weight(0, 2) == 0.5);
    for (std::size_t r = 0; r < d.n_rows; ++r) {
      auto a = model_forward(before, d.row(r)), b = model_forward(m, d.row(r));
      for (std::size_t k = 0; k < 3; ++k) CHECK(a[k] == doctest::Approx(b[k]).epsilon(1e-15));
    }
  }
  auto alive = build_model(s, 3, 3, 5);
  for (std::size_t r = 0; r < 3; ++r) alive.out_weight(0, r) = 0.7;
  auto copy = alive.params;
  CHECK(reset_dead_rules(alive, 1e-3, 1) == 0);
  CHECK(alive.params == copy);
}

TEST_CASE("fit basics") {
  auto s = fixture::parse("a binary\nb binary\nc binary\ny target\n");
  dataset d;
  d.schema = s;
  for (int rep = 0; rep < 8; ++rep)
    for (int x = 0; x < 8; ++x) {
      const double a = x & 1, b = (x >> 1) & 1, c = (x >> 2) & 1;
      d.x.insert(d.x.end(), {a, b, c});
      d.y.push_back((a == 1 && b == 0) || c == 1 ? 1.0 : 0.0);
      ++d.n_rows;
    }
  auto m0 = build_model(s, 8, 1, 3);
  auto m = m0;
  train_config cfg;
  cfg.max_epochs = 0;
  fit(m, d, cfg);
  CHECK(m.params == m0.params);

  cfg.max_epochs = 300;
  cfg.learning_rate = 1e-2;
  cfg.seed = 1;
  auto h = fit(m, d, cfg);
  CHECK(h.stratified);
  CHECK(compute_loss(m, d, cfg).l2 < compute_loss(m0, d, cfg).l2);
  CHECK(h.best_epoch >= 1);

  cfg.validation_fraction = 0.0;
  cfg.max_epochs = 5;
  auto h2 = fit(m, d, cfg);
  CHECK(h2.epochs.size() == 5);
  CHECK(h2.best_epoch == 5);
}

TEST_CASE("stratified split") {
  auto s = fixture::parse("a binary\ny class u v w\n");
  auto d = fixture::random_rows(s, 300, 8);
  auto sp = stratified_split(d, 0.2, 4);
  CHECK(sp.stratified);
  CHECK(sp.train.size() + sp.valid.size() == 300);
  auto st = strata(d);
  std::vector<int> all(3), val(3);
  for (std::size_t r = 0; r < d.n_rows; ++r) ++all[st[r]];
  for (auto r : sp.valid) ++val[st[r]];
  for (int k = 0; k < 3; ++k) CHECK(std::abs(val[k] - 0.2 * all[k]) <= 1.0);

  dataset one;
  one.schema = fixture::parse("a binary\ny target\n");
  one.n_rows = 10;
  one.x.assign(10, 1.0);
  one.y.assign(10, 1.0);
  auto sp1 = stratified_split(one, 0.2, 1);
  CHECK_FALSE(sp1.stratified);
  CHECK(sp1.valid.size() == 2);
}
