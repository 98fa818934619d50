#include "nln/training.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <map>
#include <numeric>
#include <random>

#include "nln/engine.hpp"
#include "nln/error.hpp"
#include "nln/log.hpp"

namespace nln {

void train_config::validate() const {
  if (!(lambda_nonempty > 0) || !(lambda_sparsity > 0))
    throw precondition_error("regularization coefficients must be positive");
  if (!(validation_fraction >= 0 && validation_fraction < 1))
    throw precondition_error("validation fraction must lie in [0,1)");
  if (batch_size == 0) throw precondition_error("batch size must be positive");
  if (!(learning_rate > 0)) throw precondition_error("learning rate must be positive");
}

namespace {

std::vector<std::size_t> all_rows(const dataset& d) {
  std::vector<std::size_t> r(d.n_rows);
  std::iota(r.begin(), r.end(), 0);
  return r;
}

// Visits every learnable logical node as a contiguous run of weight indices.
template <class F>
void for_each_logical_node(const nln_model& m, F&& fn) {
  const std::size_t S = m.n_slots();
  for (const auto& bl : m.blocks)
    for (std::size_t j = 0; j < bl.n_int; ++j) fn(bl.weights + j * bl.n_dich, bl.n_dich, true);
  for (std::size_t r = 0; r < m.n_rules; ++r) {
    const std::size_t base = m.rule_offset(r);
    fn(base, S, true);
    for (const auto& s : m.slots)
      if (s.kind != feature_kind::binary) fn(base + s.enc_offset, s.width, false);
  }
  for (std::size_t k = 0; k < m.n_outputs; ++k) fn(m.out_base + k * m.n_rules, m.n_rules, false);
}

void add_regularizers(const nln_model& m, const train_config& cfg, loss_breakdown& lb,
                      std::vector<double>* grad) {
  const double* p = m.params.data();
  for_each_logical_node(m, [&](std::size_t off, std::size_t n, bool signed_domain) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += std::abs(p[off + i]);
    const double gap = std::max(0.0, 1.0 - s);
    lb.nonempty += gap * gap;
    lb.sparsity += s;
    if (!grad) return;
    const double coef = cfg.lambda_sparsity - 2.0 * cfg.lambda_nonempty * gap;
    for (std::size_t i = 0; i < n; ++i) {
      const double w = p[off + i];
      const double sg = w > 0 ? 1.0 : (w < 0 ? -1.0 : (signed_domain ? 0.0 : 1.0));
      (*grad)[off + i] += coef * sg;
    }
  });
}

loss_breakdown evaluate(const nln_model& m, const dataset& d, const train_config& cfg,
                        const std::vector<std::size_t>& rows_in, std::vector<double>* grad) {
  const std::vector<std::size_t> rows = rows_in.empty() ? all_rows(d) : rows_in;
  if (rows.empty()) throw precondition_error("loss needs a non-empty batch");
  if (d.n_outputs() != m.n_outputs) throw dimension_error("dataset and model targets differ");
  if (grad) grad->assign(m.params.size(), 0.0);
  row_state st;
  st.resize(m);
  grad_scratch sc;
  std::vector<double> d_out(m.n_outputs);
  const double inv = 1.0 / static_cast<double>(rows.size());
  double sq = 0.0;
  for (std::size_t r : rows) {
    const double* x = d.row(r);
    const double* t = d.target(r);
    forward_row(m, x, st);
    for (std::size_t k = 0; k < m.n_outputs; ++k) {
      const double e = st.out[k] - t[k];
      sq += e * e;
      d_out[k] = 2.0 * e * inv;
    }
    if (grad) backward_row(m, x, st, d_out.data(), grad->data(), sc);
  }
  loss_breakdown lb;
  lb.l2 = sq * inv;
  add_regularizers(m, cfg, lb, grad);
  lb.total = lb.l2 + cfg.lambda_nonempty * lb.nonempty + cfg.lambda_sparsity * lb.sparsity;
  return lb;
}

}  // namespace

loss_breakdown compute_loss(const nln_model& m, const dataset& d, const train_config& cfg,
                            const std::vector<std::size_t>& rows) {
  return evaluate(m, d, cfg, rows, nullptr);
}

loss_breakdown loss_and_gradient(const nln_model& m, const dataset& d, const train_config& cfg,
                                 const std::vector<std::size_t>& rows, std::vector<double>& grad) {
  return evaluate(m, d, cfg, rows, &grad);
}

double data_loss(const nln_model& m, const dataset& d, const std::vector<std::size_t>& rows_in) {
  const std::vector<std::size_t> rows = rows_in.empty() ? all_rows(d) : rows_in;
  if (rows.empty()) return 0.0;
  row_state st;
  st.resize(m);
  double sq = 0.0;
  for (std::size_t r : rows) {
    forward_row(m, d.row(r), st);
    const double* t = d.target(r);
    for (std::size_t k = 0; k < m.n_outputs; ++k) sq += (st.out[k] - t[k]) * (st.out[k] - t[k]);
  }
  return sq / static_cast<double>(rows.size());
}

void adam_state::reset(std::size_t n) {
  m.assign(n, 0.0);
  v.assign(n, 0.0);
  t = 0;
}

void adam_update(std::vector<double>& x, const std::vector<double>& grad, adam_state& st,
                 double lr, const std::vector<char>* frozen) {
  const std::size_t n = x.size();
  if (grad.size() != n) throw dimension_error("gradient length differs from parameter count");
  if (st.m.size() != n) st.reset(n);
  ++st.t;
  const double c1 = 1.0 - std::pow(st.beta1, static_cast<double>(st.t));
  const double c2 = 1.0 - std::pow(st.beta2, static_cast<double>(st.t));
  for (std::size_t i = 0; i < n; ++i) {
    if (frozen && (*frozen)[i]) continue;
    const double g = grad[i];
    st.m[i] = st.beta1 * st.m[i] + (1.0 - st.beta1) * g;
    st.v[i] = st.beta2 * st.v[i] + (1.0 - st.beta2) * g * g;
    if (st.m[i] == 0.0) continue;
    x[i] -= lr * (st.m[i] / c1) / (std::sqrt(st.v[i] / c2) + st.eps);
  }
}

loss_breakdown train_step(nln_model& model, const dataset& d, const std::vector<std::size_t>& batch,
                          adam_state& st, const train_config& cfg) {
  std::vector<double> grad;
  const loss_breakdown lb = loss_and_gradient(model, d, cfg, batch, grad);
  for (std::size_t i = 0; i < grad.size(); ++i)
    if (!std::isfinite(grad[i]))
      throw numeric_error("non-finite gradient at parameter " + std::to_string(i) + " (kind " +
                          std::to_string(static_cast<int>(model.kinds[i])) + ", value " +
                          std::to_string(model.params[i]) + ")");
  std::vector<char> frozen;
  if (cfg.continuous_only) {
    frozen.resize(grad.size());
    for (std::size_t i = 0; i < grad.size(); ++i) frozen[i] = !is_continuous_param(model.kinds[i]);
  }
  adam_update(model.params, grad, st, cfg.learning_rate, cfg.continuous_only ? &frozen : nullptr);
  project(model);
  return lb;
}

bool rule_is_dead(const nln_model& m, std::size_t r, double eps) {
  if (m.and_bias(r) <= eps) return true;
  double best = 0.0;
  for (std::size_t k = 0; k < m.n_outputs; ++k) best = std::max(best, m.out_weight(k, r));
  return best <= eps;
}

std::size_t reset_dead_rules(nln_model& m, double eps, std::uint64_t seed, adam_state* state) {
  std::mt19937_64 rng(seed);
  std::size_t count = 0;
  for (std::size_t r = 0; r < m.n_rules; ++r) {
    if (!rule_is_dead(m, r, eps)) continue;
    reset_rule(m, r, rng());
    ++count;
    if (state && !state->m.empty()) {
      for (std::size_t i = m.rule_offset(r); i < m.rule_offset(r) + m.rule_stride; ++i)
        state->m[i] = state->v[i] = 0.0;
      for (std::size_t k = 0; k < m.n_outputs; ++k)
        state->m[m.out_weight_index(k, r)] = state->v[m.out_weight_index(k, r)] = 0.0;
    }
  }
  return count;
}

split_result stratified_split(const dataset& d, double frac, std::uint64_t seed) {
  split_result out;
  std::mt19937_64 rng(seed);
  if (frac <= 0.0) {
    out.train = all_rows(d);
    return out;
  }
  const auto st = strata(d);
  std::map<int, std::vector<std::size_t>> groups;
  for (std::size_t r = 0; r < d.n_rows; ++r) groups[st[r]].push_back(r);
  bool usable = !groups.count(-1) && groups.size() >= 2;
  for (const auto& [key, rows] : groups)
    if (rows.size() < 2) usable = false;
  if (!usable) {
    out.stratified = false;
    groups.clear();
    groups[0] = all_rows(d);
  }
  for (auto& [key, rows] : groups) {
    std::shuffle(rows.begin(), rows.end(), rng);
    auto n_valid = static_cast<std::size_t>(std::floor(frac * static_cast<double>(rows.size()) + 0.5));
    n_valid = std::min(n_valid, rows.size() - 1);
    out.valid.insert(out.valid.end(), rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(n_valid));
    out.train.insert(out.train.end(), rows.begin() + static_cast<std::ptrdiff_t>(n_valid), rows.end());
  }
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.valid.begin(), out.valid.end());
  return out;
}

train_history fit(nln_model& m, const dataset& d, const train_config& cfg) {
  cfg.validate();
  if (d.n_rows == 0) throw precondition_error("cannot fit on an empty dataset");
  train_history h;
  std::mt19937_64 rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
  auto split = stratified_split(d, cfg.validation_fraction, rng());
  h.stratified = split.stratified;
  if (!split.stratified)
    log_warning("stratified split impossible, falling back to an unstratified split");
  const bool early_stop = !split.valid.empty();

  adam_state adam;
  adam.reset(m.params.size());
  std::vector<double> best = m.params;
  double best_valid = early_stop ? compute_loss(m, d, cfg, split.valid).l2 : 0.0;
  std::size_t since_best = 0;

  std::vector<std::size_t> order = split.train;
  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    epoch_record rec;
    rec.epoch = epoch;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      std::vector<std::size_t> batch(order.begin() + static_cast<std::ptrdiff_t>(start),
                                     order.begin() + static_cast<std::ptrdiff_t>(end));
      auto lb = train_step(m, d, batch, adam, cfg);
      rec.train.l2 += lb.l2;
      rec.train.nonempty += lb.nonempty;
      rec.train.sparsity += lb.sparsity;
      rec.train.total += lb.total;
      ++batches;
    }
    if (batches) {
      const double inv = 1.0 / static_cast<double>(batches);
      rec.train.l2 *= inv;
      rec.train.nonempty *= inv;
      rec.train.sparsity *= inv;
      rec.train.total *= inv;
    }
    if (cfg.reset_dead) rec.resets = reset_dead_rules(m, cfg.dead_rule_epsilon, rng(), &adam);

    if (early_stop) {
      rec.valid_l2 = compute_loss(m, d, cfg, split.valid).l2;
      if (rec.valid_l2 < best_valid) {
        best_valid = rec.valid_l2;
        best = m.params;
        h.best_epoch = epoch;
        since_best = 0;
      } else {
        ++since_best;
      }
    } else {
      h.best_epoch = epoch;
    }
    h.epochs.push_back(rec);
    if (cfg.verbose && (epoch % 50 == 0 || epoch == 1))
      log_info("epoch " + std::to_string(epoch) + " train " + std::to_string(rec.train.total) +
               " l2 " + std::to_string(rec.train.l2) +
               (early_stop ? " valid " + std::to_string(rec.valid_l2) : std::string()) +
               " resets " + std::to_string(rec.resets));
    if (early_stop && since_best >= cfg.patience) break;
  }
  if (early_stop) m.params = best;
  return h;
}

void write_history_csv(std::ostream& out, const train_history& h) {
  out << "epoch,train_l2,train_nonempty,train_sparsity,train_total,valid_l2,resets\n";
  for (const auto& e : h.epochs)
    out << e.epoch << ',' << e.train.l2 << ',' << e.train.nonempty << ',' << e.train.sparsity << ','
        << e.train.total << ',' << e.valid_l2 << ',' << e.resets << '\n';
}

}  // namespace nln
