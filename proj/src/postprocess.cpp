#include "nln/postprocess.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <set>

#include "nln/engine.hpp"
#include "nln/error.hpp"
#include "nln/log.hpp"
#include "nln/metrics.hpp"
#include "nln/nodes.hpp"

namespace nln {

std::string to_string(discretize_strategy s) {
  switch (s) {
    case discretize_strategy::descending_selection: return "descending";
    case discretize_strategy::subtractive: return "subtractive";
    case discretize_strategy::additive: return "additive";
    case discretize_strategy::ascending_selection: return "ascending";
  }
  return "?";
}

discretize_strategy parse_strategy(const std::string& name) {
  if (name == "descending" || name == "descending_selection") return discretize_strategy::descending_selection;
  if (name == "subtractive") return discretize_strategy::subtractive;
  if (name == "additive") return discretize_strategy::additive;
  if (name == "ascending" || name == "ascending_selection") return discretize_strategy::ascending_selection;
  throw precondition_error("unknown discretization strategy '" + name + "'");
}

void write_reports(std::ostream& out, const std::vector<stage_report>& reports) {
  out << "stage,loss_before,loss_after,weights_changed,rules_before,rules_after,warnings\n";
  for (const auto& r : reports)
    out << r.stage << ',' << r.loss_before << ',' << r.loss_after << ',' << r.weights_changed << ','
        << r.rules_before << ',' << r.rules_after << ',' << r.warnings << '\n';
}

std::vector<std::size_t> active_rules(const nln_model& m) {
  std::vector<std::size_t> out;
  for (std::size_t r = 0; r < m.n_rules; ++r)
    for (std::size_t k = 0; k < m.n_outputs; ++k)
      if (m.out_weight(k, r) != 0.0) {
        out.push_back(r);
        break;
      }
  return out;
}

namespace {

constexpr std::size_t none = static_cast<std::size_t>(-1);

// Full-dataset L2 loss with cached interval, rule and output activations.
// A probe recomputes only what one parameter reaches, always along the same
// arithmetic path, so candidates with no effect tie exactly.
class evaluator {
 public:
  evaluator(nln_model& m, const dataset& d) : m_(m), d_(d), N_(d.n_rows) {
    if (d.n_features() != m.schema.features.size() || d.n_outputs() != m.n_outputs)
      throw dimension_error("dataset does not match the model");
    nd_ = m.options.n_dichotomies;
    ni_ = nd_ + 1;
    rebuild();
  }

  void rebuild() {
    const double* p = m_.params.data();
    dich_.assign(m_.blocks.size() * N_ * nd_, 0.0);
    intv_.assign(m_.blocks.size() * N_ * ni_, 0.0);
    for (std::size_t b = 0; b < m_.blocks.size(); ++b) {
      const auto& bl = m_.blocks[b];
      for (std::size_t row = 0; row < N_; ++row) {
        const double v = d_.value(row, bl.feature);
        if (is_missing(v)) continue;
        double* dv = dich_.data() + (b * N_ + row) * nd_;
        for (std::size_t k = 0; k < nd_; ++k) dv[k] = sigmoid(p[bl.sharpness + k] * (v - p[bl.boundary + k]));
        for (std::size_t j = 0; j < ni_; ++j) intv_[(b * N_ + row) * ni_ + j] = interval(b, j, row);
      }
    }
    rule_.assign(m_.n_rules * N_, 0.0);
    for (std::size_t r = 0; r < m_.n_rules; ++r)
      for (std::size_t row = 0; row < N_; ++row) rule_[r * N_ + row] = rule_value(r, row, none, none, nullptr);
    out_.assign(m_.n_outputs * N_, 0.0);
    tl_.assign(m_.n_outputs, 0.0);
    rv_.assign(m_.n_rules, nullptr);
    for (std::size_t r = 0; r < m_.n_rules; ++r) rv_[r] = rule_.data() + r * N_;
    for (std::size_t k = 0; k < m_.n_outputs; ++k) {
      for (std::size_t row = 0; row < N_; ++row) out_[k * N_ + row] = out_value(k, row);
      tl_[k] = target_loss(k, out_.data() + k * N_);
    }
  }

  double loss() const {
    if (N_ == 0) return 0.0;
    double s = 0.0;
    for (double t : tl_) s += t;
    return s / static_cast<double>(N_);
  }

  double probe(std::size_t i, double v) { return run(i, v, false); }
  void commit(std::size_t i, double v) { run(i, v, true); }

 private:
  double interval(std::size_t b, std::size_t j, std::size_t row) const {
    const auto& bl = m_.blocks[b];
    const double* w = m_.params.data() + bl.weights + j * nd_;
    const double* dv = dich_.data() + (b * N_ + row) * nd_;
    double prod = 1.0;
    for (std::size_t k = 0; k < nd_; ++k)
      if (w[k] != 0.0) prod *= and_factor(w[k], dv[k]);
    return prod;
  }

  // Rule value on one row; interval j of block ovb read from ovcol if given.
  double rule_value(std::size_t r, std::size_t row, std::size_t ovb, std::size_t ovj,
                    const double* ovcol) const {
    const double* p = m_.params.data();
    const std::size_t S = m_.n_slots();
    const std::size_t base = m_.rule_offset(r);
    double c = p[base + S];
    for (std::size_t s = 0; s < S; ++s) {
      const double A = p[base + s];
      if (A == 0.0) continue;
      const slot& sl = m_.slots[s];
      const double x = d_.value(row, sl.feature);
      double val;
      if (is_missing(x)) {
        val = p[base + sl.miss_offset];
      } else if (sl.kind == feature_kind::binary) {
        val = x;
      } else if (sl.kind == feature_kind::categorical) {
        val = p[base + sl.enc_offset + static_cast<std::size_t>(x)];
      } else {
        const std::size_t b = m_.rule_block_index(r, s);
        const double* iv = intv_.data() + (b * N_ + row) * ni_;
        const double* w = p + base + sl.enc_offset;
        double prod = 1.0;
        for (std::size_t j = 0; j < sl.width; ++j) {
          if (w[j] == 0.0) continue;
          const double I = (b == ovb && j == ovj) ? ovcol[row] : iv[j];
          prod *= 1.0 - w[j] * I;
        }
        val = 1.0 - prod;
      }
      c *= and_factor(A, val);
    }
    return clamp_unit(c);
  }

  double out_value(std::size_t k, std::size_t row) const {
    const double* p = m_.params.data();
    const double* w = p + m_.out_base + k * m_.n_rules;
    double prod = 1.0 - p[m_.out_bias_base + k];
    for (std::size_t r = 0; r < m_.n_rules; ++r)
      if (w[r] != 0.0) prod *= 1.0 - w[r] * rv_[r][row];
    return clamp_unit(1.0 - prod);
  }

  double target_loss(std::size_t k, const double* out) const {
    const std::size_t K = m_.n_outputs;
    double s = 0.0;
    for (std::size_t row = 0; row < N_; ++row) {
      const double e = d_.y[row * K + k] - out[row];
      s += e * e;
    }
    return s;
  }

  std::vector<std::size_t> targets_of(std::size_t r) const {
    std::vector<std::size_t> t;
    for (std::size_t k = 0; k < m_.n_outputs; ++k)
      if (m_.out_weight(k, r) != 0.0) t.push_back(k);
    return t;
  }

  // Loss over the targets reached by the changed rules, with rv_ pointing at
  // the new rule columns.
  double outputs_loss(const std::vector<std::size_t>& targets, bool write) {
    double loss = 0.0;
    col_.resize(N_);
    for (std::size_t k : targets) {
      for (std::size_t row = 0; row < N_; ++row) col_[row] = out_value(k, row);
      const double tl = target_loss(k, col_.data());
      loss += tl;
      if (write) {
        std::copy(col_.begin(), col_.end(), out_.begin() + static_cast<std::ptrdiff_t>(k * N_));
        tl_[k] = tl;
      }
    }
    return loss;
  }

  double run(std::size_t i, double v, bool write) {
    double& slot_ref = m_.params[i];
    const double old = slot_ref;
    slot_ref = v;
    double loss = 0.0;
    const param_kind kind = m_.kinds[i];
    const std::size_t R = m_.n_rules;

    if (kind == param_kind::out_weight || kind == param_kind::out_bias) {
      const std::size_t k = kind == param_kind::out_bias ? i - m_.out_bias_base : (i - m_.out_base) / R;
      loss = outputs_loss({k}, write);
    } else if (kind == param_kind::interval_weight) {
      std::size_t b = 0;
      while (!(i >= m_.blocks[b].weights && i < m_.blocks[b].weights + ni_ * nd_)) ++b;
      const std::size_t j = (i - m_.blocks[b].weights) / nd_;
      const std::size_t set = b / m_.n_continuous(), local = b % m_.n_continuous();
      std::size_t s = 0;
      while (!(m_.slots[s].kind == feature_kind::continuous && m_.slots[s].block == local)) ++s;
      std::vector<std::size_t> rules, targets;
      for (std::size_t r = 0; r < R; ++r) {
        if (m_.rule_set[r] != set) continue;
        if (m_.params[m_.enc_index(r, s, j)] == 0.0 || m_.and_weight(r, s) == 0.0) continue;
        auto t = targets_of(r);
        if (t.empty() && !write) continue;
        rules.push_back(r);
        targets.insert(targets.end(), t.begin(), t.end());
      }
      std::sort(targets.begin(), targets.end());
      targets.erase(std::unique(targets.begin(), targets.end()), targets.end());
      if (!rules.empty() || write) {
        icol_.assign(N_, 0.0);
        for (std::size_t row = 0; row < N_; ++row)
          if (!is_missing(d_.value(row, m_.blocks[b].feature))) icol_[row] = interval(b, j, row);
        scratch_.resize(rules.size());
        for (std::size_t q = 0; q < rules.size(); ++q) {
          scratch_[q].resize(N_);
          for (std::size_t row = 0; row < N_; ++row)
            scratch_[q][row] = rule_value(rules[q], row, b, j, icol_.data());
          rv_[rules[q]] = scratch_[q].data();
        }
        loss = outputs_loss(targets, write);
        for (std::size_t q = 0; q < rules.size(); ++q) {
          const std::size_t r = rules[q];
          rv_[r] = rule_.data() + r * N_;
          if (write) std::copy(scratch_[q].begin(), scratch_[q].end(), rule_.begin() + static_cast<std::ptrdiff_t>(r * N_));
        }
        if (write)
          for (std::size_t row = 0; row < N_; ++row) intv_[(b * N_ + row) * ni_ + j] = icol_[row];
      }
    } else if (i >= m_.rule_base && i < m_.out_base) {
      const std::size_t r = (i - m_.rule_base) / m_.rule_stride;
      const auto targets = targets_of(r);
      if (!targets.empty() || write) {
        scratch_.resize(1);
        scratch_[0].resize(N_);
        for (std::size_t row = 0; row < N_; ++row) scratch_[0][row] = rule_value(r, row, none, none, nullptr);
        rv_[r] = scratch_[0].data();
        loss = outputs_loss(targets, write);
        rv_[r] = rule_.data() + r * N_;
        if (write) std::copy(scratch_[0].begin(), scratch_[0].end(), rule_.begin() + static_cast<std::ptrdiff_t>(r * N_));
      }
    } else {
      slot_ref = old;
      throw precondition_error("parameter cannot be probed");
    }
    if (!write) slot_ref = old;
    return loss;
  }

  nln_model& m_;
  const dataset& d_;
  std::size_t N_, nd_ = 0, ni_ = 0;
  std::vector<double> dich_, intv_, rule_, out_, tl_, col_, icol_;
  std::vector<const double*> rv_;
  std::vector<std::vector<double>> scratch_;
};

// Parameter groups in processing order: output layer, rule ANDs, then each
// rule's input encoders, then the shared interval ANDs.
std::vector<std::vector<std::size_t>> weight_groups(const nln_model& m) {
  std::vector<std::vector<std::size_t>> groups;
  std::vector<std::size_t> g;
  for (std::size_t k = 0; k < m.n_outputs; ++k)
    for (std::size_t r = 0; r < m.n_rules; ++r) g.push_back(m.out_weight_index(k, r));
  groups.push_back(g);
  g.clear();
  for (std::size_t r = 0; r < m.n_rules; ++r)
    for (std::size_t s = 0; s < m.n_slots(); ++s) g.push_back(m.and_weight_index(r, s));
  groups.push_back(g);
  for (std::size_t r = 0; r < m.n_rules; ++r)
    for (std::size_t s = 0; s < m.n_slots(); ++s) {
      if (m.slots[s].kind == feature_kind::binary) continue;
      g.clear();
      for (std::size_t v = 0; v < m.slots[s].width; ++v) g.push_back(m.enc_index(r, s, v));
      groups.push_back(g);
    }
  for (const auto& bl : m.blocks) {
    g.clear();
    for (std::size_t q = 0; q < bl.n_int * bl.n_dich; ++q) g.push_back(bl.weights + q);
    groups.push_back(g);
  }
  return groups;
}

double sign_of(double w) { return w > 0.0 ? 1.0 : (w < 0.0 ? -1.0 : 0.0); }

std::vector<std::size_t> by_magnitude(const std::vector<std::size_t>& group, const std::vector<double>& orig,
                                      bool descending) {
  std::vector<std::size_t> order(group.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return descending ? std::abs(orig[a]) > std::abs(orig[b]) : std::abs(orig[a]) < std::abs(orig[b]);
  });
  return order;
}

void discretize_group(nln_model& m, evaluator& ev, const std::vector<std::size_t>& group,
                      discretize_strategy strategy) {
  std::vector<double> orig(group.size());
  for (std::size_t q = 0; q < group.size(); ++q) orig[q] = m.params[group[q]];
  switch (strategy) {
    case discretize_strategy::descending_selection:
    case discretize_strategy::ascending_selection: {
      const bool desc = strategy == discretize_strategy::descending_selection;
      for (std::size_t q : by_magnitude(group, orig, desc)) {
        const std::size_t i = group[q];
        if (m.params[i] == 0.0) continue;
        const double s = sign_of(m.params[i]);
        const double l0 = ev.probe(i, 0.0);
        const double ls = ev.probe(i, s);
        ev.commit(i, ls < l0 ? s : 0.0);
      }
      break;
    }
    case discretize_strategy::subtractive: {
      for (std::size_t q = 0; q < group.size(); ++q) m.params[group[q]] = sign_of(orig[q]);
      ev.rebuild();
      for (std::size_t q : by_magnitude(group, orig, false)) {
        const std::size_t i = group[q];
        if (m.params[i] == 0.0) continue;
        const double lc = ev.probe(i, m.params[i]);
        const double l0 = ev.probe(i, 0.0);
        if (l0 < lc) ev.commit(i, 0.0);
      }
      break;
    }
    case discretize_strategy::additive: {
      for (std::size_t i : group) m.params[i] = 0.0;
      ev.rebuild();
      for (std::size_t q : by_magnitude(group, orig, true)) {
        const std::size_t i = group[q];
        if (orig[q] == 0.0) continue;
        const double lc = ev.probe(i, 0.0);
        const double ls = ev.probe(i, sign_of(orig[q]));
        if (ls < lc) ev.commit(i, sign_of(orig[q]));
      }
      break;
    }
  }
}

std::size_t count_changes(const std::vector<double>& before, const std::vector<double>& after) {
  std::size_t n = 0;
  for (std::size_t i = 0; i < before.size(); ++i)
    if (before[i] != after[i]) ++n;
  return n;
}

// Unbiased rule activations, n_rows * n_rules.
std::vector<double> unbiased_matrix(const nln_model& m, const dataset& d) {
  const std::size_t R = m.n_rules, S = m.n_slots();
  std::vector<double> out(d.n_rows * R);
  row_state st;
  st.resize(m);
  for (std::size_t row = 0; row < d.n_rows; ++row) {
    forward_row(m, d.row(row), st);
    for (std::size_t r = 0; r < R; ++r) {
      double c = 1.0;
      for (std::size_t s = 0; s < S; ++s) c *= and_factor(m.and_weight(r, s), st.slot[r * S + s]);
      out[row * R + r] = clamp_unit(c);
    }
  }
  return out;
}

}  // namespace

stage_report discretize(nln_model& m, const dataset& d, discretize_strategy strategy) {
  stage_report rep;
  rep.stage = "discretize-" + to_string(strategy);
  rep.rules_before = rep.rules_after = active_rules(m).size();
  const auto before = m.params;
  evaluator ev(m, d);
  rep.loss_before = ev.loss();
  for (const auto& g : weight_groups(m)) discretize_group(m, ev, g, strategy);
  rep.loss_after = ev.loss();
  rep.weights_changed = count_changes(before, m.params);
  rep.rules_after = active_rules(m).size();
  m.discretized = true;
  return rep;
}

train_config retrain_defaults(std::uint64_t seed) {
  train_config cfg;
  cfg.max_epochs = 100;
  cfg.patience = 100;
  cfg.validation_fraction = 0.0;
  cfg.reset_dead = false;
  cfg.continuous_only = true;
  cfg.seed = seed;
  return cfg;
}

stage_report retrain_continuous(nln_model& m, const dataset& d, const train_config& cfg) {
  stage_report rep;
  rep.stage = "retrain";
  rep.rules_before = rep.rules_after = active_rules(m).size();
  rep.loss_before = data_loss(m, d);
  const auto before = m.params;
  train_config c = cfg;
  c.continuous_only = true;
  c.reset_dead = false;
  if (d.n_rows > 0 && c.max_epochs > 0) fit(m, d, c);
  rep.loss_after = data_loss(m, d);
  rep.weights_changed = count_changes(before, m.params);
  return rep;
}

stage_report prune(nln_model& m, const dataset& d) {
  stage_report rep;
  rep.stage = "prune";
  rep.rules_before = active_rules(m).size();
  const auto before = m.params;
  const std::size_t rules_before = m.n_rules;
  {
    evaluator ev(m, d);
    rep.loss_before = ev.loss();
    const auto groups = weight_groups(m);
    bool changed = true;
    while (changed) {
      changed = false;
      for (const auto& g : groups)
        for (std::size_t i : g) {
          const double w = m.params[i];
          if (w == 0.0) continue;
          const double lc = ev.probe(i, w);
          const double l0 = ev.probe(i, 0.0);
          if (l0 <= lc) {
            ev.commit(i, 0.0);
            changed = true;
          }
        }
    }
    rep.loss_after = ev.loss();
  }
  rep.weights_changed = count_changes(before, m.params);
  auto act = active_rules(m);
  if (act.empty()) act.push_back(0);
  if (act.size() != rules_before) m = keep_rules(m, act);
  rep.rules_after = active_rules(m).size();
  return rep;
}

stage_report adjust_biases(nln_model& m, const dataset& d, coverage_stats* stats) {
  stage_report rep;
  rep.stage = "adjust-biases";
  rep.rules_before = active_rules(m).size();
  rep.loss_before = data_loss(m, d);
  const std::size_t K = m.n_outputs;

  std::vector<std::size_t> keep, target;
  for (std::size_t r = 0; r < m.n_rules; ++r)
    for (std::size_t k = 0; k < K; ++k)
      if (m.out_weight(k, r) != 0.0) {
        keep.push_back(r);
        target.push_back(k);
      }
  if (keep.empty()) {
    log_warning("adjust_biases: model has no active rule");
    rep.warnings = 1;
    rep.loss_after = rep.loss_before;
    return rep;
  }
  bool identity = keep.size() == m.n_rules;
  for (std::size_t i = 0; identity && i < keep.size(); ++i) identity = keep[i] == i;
  if (!identity) {
    m = keep_rules(m, keep);
    for (std::size_t i = 0; i < keep.size(); ++i)
      for (std::size_t k = 0; k < K; ++k)
        if (k != target[i]) m.out_weight(k, i) = 0.0;
  }

  const std::size_t R = m.n_rules, N = d.n_rows;
  const auto ct = unbiased_matrix(m, d);
  coverage_stats cs;
  cs.rule_target = target;
  cs.mass_pos.assign(R, 0.0);
  cs.mass_total.assign(R, 0.0);
  for (std::size_t row = 0; row < N; ++row)
    for (std::size_t r = 0; r < R; ++r) {
      const double c = ct[row * R + r];
      cs.mass_total[r] += c;
      if (d.target(row)[target[r]] > 0.5) cs.mass_pos[r] += c;
    }
  for (std::size_t r = 0; r < R; ++r) {
    if (cs.mass_total[r] > 0.0) {
      m.and_bias(r) = std::clamp(cs.mass_pos[r] / cs.mass_total[r], 0.0, 1.0);
    } else {
      log_warning("adjust_biases: rule " + std::to_string(r) + " covers nothing, bias kept");
      ++rep.warnings;
    }
  }

  cs.miss_pos.assign(K, 0.0);
  cs.miss_total.assign(K, 0.0);
  for (std::size_t row = 0; row < N; ++row)
    for (std::size_t k = 0; k < K; ++k) {
      double prod = 1.0;
      for (std::size_t r = 0; r < R; ++r) {
        const double w = m.out_weight(k, r);
        if (w != 0.0) prod *= 1.0 - w * m.and_bias(r) * ct[row * R + r];
      }
      // 1 - c~_k is the product itself
      cs.miss_total[k] += prod;
      if (d.target(row)[k] > 0.5) cs.miss_pos[k] += prod;
    }
  for (std::size_t k = 0; k < K; ++k) {
    if (cs.miss_total[k] > 0.0) {
      m.out_bias(k) = std::clamp(cs.miss_pos[k] / cs.miss_total[k], 0.0, 1.0);
    } else {
      log_warning("adjust_biases: target " + std::to_string(k) + " has no uncovered mass, bias kept");
      ++rep.warnings;
    }
  }
  rep.loss_after = data_loss(m, d);
  rep.rules_after = active_rules(m).size();
  rep.weights_changed = identity ? 0 : keep.size();
  if (stats) *stats = std::move(cs);
  return rep;
}

double inclusion_score(const std::vector<double>& ci, const std::vector<double>& cj) {
  if (ci.size() != cj.size()) throw dimension_error("activation lengths differ");
  double num = 0.0, den = 0.0;
  for (std::size_t x = 0; x < ci.size(); ++x) {
    num += std::min(std::sqrt(ci[x] * cj[x]), ci[x]);
    den += ci[x];
  }
  if (den <= 0.0) {
    log_warning("inclusion_score: rule has no mass, treated as included");
    return 1.0;
  }
  return std::clamp(num / den, 0.0, 1.0);
}

double inclusion_score(const nln_model& m, std::size_t i, std::size_t j, const dataset& d) {
  if (i >= m.n_rules || j >= m.n_rules) throw dimension_error("rule index out of range");
  return inclusion_score(rule_activation_unbiased(m, d, i), rule_activation_unbiased(m, d, j));
}

stage_report eliminate_included_rules(nln_model& m, const dataset& d) {
  stage_report rep;
  rep.stage = "eliminate-included";
  rep.loss_before = data_loss(m, d);
  rep.rules_before = active_rules(m).size();
  const std::size_t R = m.n_rules, N = d.n_rows, K = m.n_outputs;
  const auto ct = unbiased_matrix(m, d);
  std::vector<std::vector<double>> cols(R, std::vector<double>(N));
  for (std::size_t row = 0; row < N; ++row)
    for (std::size_t r = 0; r < R; ++r) cols[r][row] = ct[row * R + r];
  auto targets = [&](std::size_t r) {
    std::vector<std::size_t> t;
    for (std::size_t k = 0; k < K; ++k)
      if (m.out_weight(k, r) != 0.0) t.push_back(k);
    return t;
  };
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < R; ++i) {
    const auto ti = targets(i);
    bool drop = false;
    for (std::size_t j = 0; j < R && !drop && !ti.empty(); ++j) {
      if (j == i || targets(j) != ti || !(m.and_bias(i) < m.and_bias(j))) continue;
      drop = inclusion_score(cols[i], cols[j]) >= 1.0 - inclusion_tolerance;
    }
    if (!drop) keep.push_back(i);
  }
  if (keep.size() != R) m = keep_rules(m, keep);
  rep.weights_changed = R - keep.size();
  rep.rules_after = active_rules(m).size();
  rep.loss_after = data_loss(m, d);
  return rep;
}

std::vector<stage_report> postprocess(nln_model& m, const dataset& d, const postprocess_config& cfg) {
  std::vector<stage_report> reps;
  reps.push_back(discretize(m, d, cfg.strategy));
  if (cfg.retrain) reps.push_back(retrain_continuous(m, d, cfg.retrain_cfg));
  reps.push_back(prune(m, d));
  reps.push_back(adjust_biases(m, d));
  if (cfg.eliminate_included) reps.push_back(eliminate_included_rules(m, d));
  m.discretized = true;
  m.postprocessed = true;
  return reps;
}

nln_model merge_models(const std::vector<nln_model>& models, const dataset& d,
                       std::vector<stage_report>* reports) {
  if (models.empty()) throw precondition_error("nothing to merge");
  for (const auto& m : models)
    if (m.schema.output_names() != models.front().schema.output_names())
      throw schema_error("models have different targets");
  nln_model out = concatenate(models);
  out.thresholds.clear();
  std::vector<stage_report> reps;
  reps.push_back(prune(out, d));
  reps.push_back(adjust_biases(out, d));
  out.discretized = true;
  out.postprocessed = true;
  fit_thresholds(out, d);
  if (reports) *reports = std::move(reps);
  return out;
}

namespace {

struct subset_scorer {
  const nln_model& m;
  const dataset& d;
  std::vector<std::size_t> rules;  // active rules
  std::vector<double> act;         // n_rows * rules.size(), biased
  std::vector<double> probs;

  subset_scorer(const nln_model& model, const dataset& data) : m(model), d(data), rules(active_rules(model)) {
    const std::size_t A = rules.size();
    act.resize(d.n_rows * A);
    row_state st;
    st.resize(m);
    for (std::size_t row = 0; row < d.n_rows; ++row) {
      forward_row(m, d.row(row), st);
      for (std::size_t q = 0; q < A; ++q) act[row * A + q] = st.rule[rules[q]];
    }
  }

  double score(const std::vector<std::size_t>& subset) {
    const std::size_t K = m.n_outputs, A = rules.size();
    probs.assign(d.n_rows * K, 0.0);
    for (std::size_t row = 0; row < d.n_rows; ++row)
      for (std::size_t k = 0; k < K; ++k) {
        double prod = 1.0 - m.out_bias(k);
        for (std::size_t q : subset) {
          const double w = m.out_weight(k, rules[q]);
          if (w != 0.0) prod *= 1.0 - w * act[row * A + q];
        }
        probs[row * K + k] = clamp_unit(1.0 - prod);
      }
    std::vector<double> th;
    if (m.task() != task_kind::multiclass) th = fit_thresholds(probs, d);
    return score_outputs(probs, d, th).f1;
  }
};

bool better(const rule_subset& a, const rule_subset& b) {
  if (a.f1 != b.f1) return a.f1 > b.f1;
  if (a.rules.size() != b.rules.size()) return a.rules.size() < b.rules.size();
  return a.rules < b.rules;
}

}  // namespace

subset_search find_minimal_subset(const nln_model& m, const dataset& d, std::size_t max_rules,
                                  std::size_t keep, std::size_t beam_width) {
  if (max_rules == 0) throw precondition_error("max_rules must be positive");
  subset_scorer sc(m, d);
  const std::size_t A = sc.rules.size();
  subset_search res;
  std::vector<rule_subset> pool;
  auto record = [&](const std::vector<std::size_t>& q) {
    rule_subset s;
    s.f1 = sc.score(q);
    for (std::size_t i : q) s.rules.push_back(sc.rules[i]);
    pool.push_back(std::move(s));
  };
  const std::size_t limit = std::min(max_rules, A);
  if (A <= exhaustive_subset_limit) {
    std::vector<std::size_t> cur;
    auto rec = [&](auto&& self, std::size_t start) -> void {
      if (!cur.empty()) record(cur);
      if (cur.size() == limit) return;
      for (std::size_t i = start; i < A; ++i) {
        cur.push_back(i);
        self(self, i + 1);
        cur.pop_back();
      }
    };
    rec(rec, 0);
  } else {
    res.approximate = true;
    log_warning("find_minimal_subset: " + std::to_string(A) + " rules, using beam search");
    std::vector<std::vector<std::size_t>> beam{{}};
    for (std::size_t size = 1; size <= limit; ++size) {
      std::set<std::vector<std::size_t>> seen;
      std::vector<std::pair<double, std::vector<std::size_t>>> level;
      for (const auto& b : beam)
        for (std::size_t i = 0; i < A; ++i) {
          if (std::find(b.begin(), b.end(), i) != b.end()) continue;
          auto q = b;
          q.push_back(i);
          std::sort(q.begin(), q.end());
          if (!seen.insert(q).second) continue;
          record(q);
          level.emplace_back(pool.back().f1, q);
        }
      std::stable_sort(level.begin(), level.end(),
                       [](const auto& a, const auto& b) { return a.first > b.first; });
      beam.clear();
      for (std::size_t q = 0; q < level.size() && q < beam_width; ++q) beam.push_back(level[q].second);
    }
  }
  std::sort(pool.begin(), pool.end(), better);
  if (pool.size() > keep) pool.resize(keep);
  res.ranked = std::move(pool);
  return res;
}

}  // namespace nln
