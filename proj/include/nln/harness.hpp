#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "nln/boolnet.hpp"
#include "nln/dataset.hpp"
#include "nln/metrics.hpp"
#include "nln/model.hpp"
#include "nln/postprocess.hpp"
#include "nln/rules.hpp"
#include "nln/training.hpp"

namespace nln {

// round(ratio * n), halves rounded up.
std::size_t subsample_size(std::size_t n, double ratio);

// Uniform sample without replacement, rows kept in their original order.
dataset subsample_ratio(const dataset& d, double ratio, std::uint64_t seed);

struct fold_plan {
  std::vector<std::vector<std::size_t>> test;  // row indices of each test fold
  bool stratified = true;
};

// Stratified k folds. Falls back to plain shuffled folds when a stratum has
// fewer than k rows or the data is multilabel.
fold_plan kfold_split(const dataset& d, std::size_t k, std::uint64_t seed);

// Trains a finished model on the given rows.
using pipeline = std::function<nln_model(const dataset& train, std::uint64_t seed)>;

struct pipeline_config {
  std::size_t n_rules = 128;
  model_options model;
  train_config train;
  bool postprocess = true;
  postprocess_config post;
};

// Build, fit, optionally post-process, then fit decision thresholds.
nln_model run_pipeline(const dataset& train, const pipeline_config& cfg, std::uint64_t seed);
pipeline make_pipeline(const pipeline_config& cfg);

struct fold_result {
  std::size_t repeat = 0, fold = 0;
  std::uint64_t seed = 0;
  std::size_t train_rows = 0, test_rows = 0;
  metrics test;
  std::size_t rules = 0;          // active rules
  double rule_size = 0.0;         // mean rule size, 0 when not discretized
  double seconds = 0.0;
};

struct cv_summary {
  double f1 = 0.0, f1_std = 0.0;
  double accuracy = 0.0, accuracy_std = 0.0;
  double row_accuracy = 0.0;
  double rules = 0.0, rule_size = 0.0;
};

struct cv_result {
  std::vector<fold_result> folds;  // by repeat, then fold
  cv_summary mean;
  bool stratified = true;
  std::uint64_t seed = 0;
  std::vector<nln_model> models;  // kept when asked
};

// Number of worker threads: NLN_THREADS when set, otherwise the hardware count.
std::size_t default_threads();

// Folds run as independent jobs; results are ordered by fold index.
cv_result kfold_cv(const dataset& d, std::size_t k, std::size_t repeats, const pipeline& p,
                   std::uint64_t seed, std::size_t threads = 0, bool keep_models = false);

void write_folds_csv(std::ostream& out, const cv_result& r);

// Rules and mean size of a model, counting only rules that reach an output.
std::pair<std::size_t, double> model_size(const nln_model& m);

// Crisp recovery between categorical or binary programs, enumerating the
// joint domain of the features either program uses (at most 2^20 points).
recovery recovery_score(const logic_program& extracted, const logic_program& truth);

// Program over binary features named like the ground-truth variables, one
// rule kept when it alone pushes its output over the decision threshold.
ground_truth_program to_ground_truth(const logic_program& p, const std::vector<double>& thresholds,
                                     const std::vector<std::string>& variables);

struct boolbench_config {
  double ratio = 0.4;
  std::size_t k = 5, repeats = 2;
  std::uint64_t seed = 1;
  std::size_t threads = 0;
  pipeline_config pipeline;
};

// Boolean-network defaults: no validation split.
boolbench_config boolbench_defaults();

struct boolbench_result {
  std::string name;
  std::size_t variables = 0, truth_rules = 0;
  double ratio = 0.0;
  std::size_t rows = 0;
  cv_result cv;
  double recovered_pct = 0.0, excess_pct = 0.0;  // mean over folds
};

// Subsample all transitions of the program, then repeated k-fold CV with
// per-bit accuracy and recovery of each fold's model.
boolbench_result boolbench(const std::string& name, const ground_truth_program& truth,
                           const boolbench_config& cfg);

void write_boolbench_row(std::ostream& out, const boolbench_result& r, bool header);

}  // namespace nln
