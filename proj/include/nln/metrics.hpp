#pragma once

#include <vector>

#include "nln/dataset.hpp"
#include "nln/model.hpp"

namespace nln {

struct confusion {
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
};

// 1 when there is nothing to find and nothing was predicted.
double f1_score(const confusion& c);

struct metrics {
  double f1 = 0.0;            // positive-class F1, macro over classes or outputs
  double accuracy = 0.0;      // per decision: per row (multiclass) or per output bit
  double row_accuracy = 0.0;  // rows with every output right
  std::size_t rows = 0;
};

metrics binary_metrics(const std::vector<int>& predicted, const std::vector<int>& truth);
metrics multiclass_metrics(const std::vector<int>& predicted, const std::vector<int>& truth,
                           std::size_t n_classes);

// Model probabilities, n_rows * n_outputs.
std::vector<double> output_matrix(const nln_model& m, const dataset& d);

// Decisions from probabilities: multiclass argmax, otherwise per-output thresholds.
metrics score_outputs(const std::vector<double>& probs, const dataset& d,
                      const std::vector<double>& thresholds);
metrics evaluate(const nln_model& m, const dataset& d);

// Grid 0.00..1.00 step 0.01, predicting positive when score >= t. Highest F1,
// ties to the lowest threshold.
double fit_threshold(const std::vector<double>& scores, const std::vector<int>& labels);

// One threshold per output from the model's probabilities on d. No-op for
// multiclass models.
void fit_thresholds(nln_model& m, const dataset& d);
std::vector<double> fit_thresholds(const std::vector<double>& probs, const dataset& d);

}  // namespace nln
