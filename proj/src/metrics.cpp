#include "nln/metrics.hpp"

#include "nln/engine.hpp"
#include "nln/error.hpp"

namespace nln {

double f1_score(const confusion& c) {
  const std::size_t denom = 2 * c.tp + c.fp + c.fn;
  if (denom == 0) return 1.0;
  return 2.0 * static_cast<double>(c.tp) / static_cast<double>(denom);
}

namespace {

void tally(confusion& c, int pred, int truth) {
  if (pred && truth) ++c.tp;
  else if (pred) ++c.fp;
  else if (truth) ++c.fn;
  else ++c.tn;
}

double ratio(std::size_t a, std::size_t b) {
  return b == 0 ? 1.0 : static_cast<double>(a) / static_cast<double>(b);
}

}  // namespace

metrics binary_metrics(const std::vector<int>& predicted, const std::vector<int>& truth) {
  if (predicted.size() != truth.size()) throw dimension_error("prediction and truth lengths differ");
  confusion c;
  for (std::size_t i = 0; i < truth.size(); ++i) tally(c, predicted[i], truth[i]);
  metrics m;
  m.rows = truth.size();
  m.f1 = f1_score(c);
  m.accuracy = ratio(c.tp + c.tn, truth.size());
  m.row_accuracy = m.accuracy;
  return m;
}

metrics multiclass_metrics(const std::vector<int>& predicted, const std::vector<int>& truth,
                           std::size_t n_classes) {
  if (predicted.size() != truth.size()) throw dimension_error("prediction and truth lengths differ");
  if (n_classes == 0) throw precondition_error("no classes");
  std::vector<confusion> per(n_classes);
  std::size_t right = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (predicted[i] == truth[i]) ++right;
    for (std::size_t k = 0; k < n_classes; ++k)
      tally(per[k], predicted[i] == static_cast<int>(k), truth[i] == static_cast<int>(k));
  }
  metrics m;
  m.rows = truth.size();
  for (const auto& c : per) m.f1 += f1_score(c);
  m.f1 /= static_cast<double>(n_classes);
  m.accuracy = ratio(right, truth.size());
  m.row_accuracy = m.accuracy;
  return m;
}

std::vector<double> output_matrix(const nln_model& m, const dataset& d) {
  std::vector<double> out(d.n_rows * m.n_outputs);
  row_state st;
  st.resize(m);
  for (std::size_t r = 0; r < d.n_rows; ++r) {
    forward_row(m, d.row(r), st);
    std::copy(st.out.begin(), st.out.end(), out.begin() + static_cast<std::ptrdiff_t>(r * m.n_outputs));
  }
  return out;
}

metrics score_outputs(const std::vector<double>& probs, const dataset& d,
                      const std::vector<double>& thresholds) {
  const std::size_t K = d.n_outputs(), N = d.n_rows;
  if (probs.size() != N * K) throw dimension_error("probability matrix has wrong size");
  if (d.schema.task() == task_kind::multiclass) {
    std::vector<int> pred(N), truth(N);
    for (std::size_t r = 0; r < N; ++r) {
      const double* p = probs.data() + r * K;
      const double* y = d.target(r);
      std::size_t best = 0, cls = 0;
      for (std::size_t k = 1; k < K; ++k) {
        if (p[k] > p[best]) best = k;
        if (y[k] > 0.5) cls = k;
      }
      pred[r] = static_cast<int>(best);
      truth[r] = static_cast<int>(cls);
    }
    return multiclass_metrics(pred, truth, K);
  }
  if (thresholds.size() != K) throw threshold_error("decision threshold not fitted");
  std::vector<confusion> per(K);
  std::size_t rows_right = 0;
  for (std::size_t r = 0; r < N; ++r) {
    bool all = true;
    for (std::size_t k = 0; k < K; ++k) {
      const int pred = probs[r * K + k] >= thresholds[k] ? 1 : 0;
      const int truth = d.target(r)[k] > 0.5 ? 1 : 0;
      tally(per[k], pred, truth);
      all = all && pred == truth;
    }
    if (all) ++rows_right;
  }
  metrics m;
  m.rows = N;
  std::size_t bits_right = 0;
  for (const auto& c : per) {
    m.f1 += f1_score(c);
    bits_right += c.tp + c.tn;
  }
  m.f1 /= static_cast<double>(K);
  m.accuracy = ratio(bits_right, N * K);
  m.row_accuracy = ratio(rows_right, N);
  return m;
}

metrics evaluate(const nln_model& m, const dataset& d) {
  return score_outputs(output_matrix(m, d), d, m.thresholds);
}

double fit_threshold(const std::vector<double>& scores, const std::vector<int>& labels) {
  if (scores.size() != labels.size()) throw dimension_error("score and label lengths differ");
  double best_t = 0.0, best_f1 = -1.0;
  for (int i = 0; i <= 100; ++i) {
    const double t = i / 100.0;
    confusion c;
    for (std::size_t j = 0; j < scores.size(); ++j) tally(c, scores[j] >= t ? 1 : 0, labels[j]);
    const double f = f1_score(c);
    if (f > best_f1) {
      best_f1 = f;
      best_t = t;
    }
  }
  return best_t;
}

std::vector<double> fit_thresholds(const std::vector<double>& probs, const dataset& d) {
  const std::size_t K = d.n_outputs(), N = d.n_rows;
  if (probs.size() != N * K) throw dimension_error("probability matrix has wrong size");
  std::vector<double> out(K);
  std::vector<double> s(N);
  std::vector<int> l(N);
  for (std::size_t k = 0; k < K; ++k) {
    for (std::size_t r = 0; r < N; ++r) {
      s[r] = probs[r * K + k];
      l[r] = d.target(r)[k] > 0.5 ? 1 : 0;
    }
    out[k] = fit_threshold(s, l);
  }
  return out;
}

void fit_thresholds(nln_model& m, const dataset& d) {
  if (m.task() == task_kind::multiclass) return;
  m.thresholds = fit_thresholds(output_matrix(m, d), d);
}

}  // namespace nln
