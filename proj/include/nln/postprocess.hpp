#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "nln/dataset.hpp"
#include "nln/model.hpp"
#include "nln/training.hpp"

namespace nln {

enum class discretize_strategy { descending_selection, subtractive, additive, ascending_selection };

std::string to_string(discretize_strategy s);
discretize_strategy parse_strategy(const std::string& name);

// What one post-processing stage did. Losses are the data (L2) loss on the
// full training set.
struct stage_report {
  std::string stage;
  double loss_before = 0.0, loss_after = 0.0;
  std::size_t weights_changed = 0;
  std::size_t rules_before = 0, rules_after = 0;
  std::size_t warnings = 0;
};

void write_reports(std::ostream& out, const std::vector<stage_report>& reports);

// Rules with at least one nonzero output weight.
std::vector<std::size_t> active_rules(const nln_model& m);

// Snaps every logical weight to {0, sign} greedily by full-dataset loss.
// Missing-value weights are left continuous.
stage_report discretize(nln_model& m, const dataset& d,
                        discretize_strategy strategy = discretize_strategy::descending_selection);

// Biases, dichotomies and missing weights only; logical weights frozen.
stage_report retrain_continuous(nln_model& m, const dataset& d, const train_config& cfg);
train_config retrain_defaults(std::uint64_t seed);

// Zeroes weights whose removal does not increase the loss, pass after pass
// until nothing changes, then drops rules with no outgoing weight.
stage_report prune(nln_model& m, const dataset& d);

struct coverage_stats {
  std::vector<std::size_t> rule_target;  // target of each rule
  std::vector<double> mass_pos, mass_total;  // per rule
  std::vector<double> miss_pos, miss_total;  // per target
};

// Sets rule biases to their positive coverage share, then output biases to
// the positive share of uncovered mass. A rule feeding several targets is
// first split into one copy per target.
stage_report adjust_biases(nln_model& m, const dataset& d, coverage_stats* stats = nullptr);

// Sum of min(sqrt(ci*cj), ci) over sum of ci; 1 when ci has no mass.
double inclusion_score(const std::vector<double>& ci, const std::vector<double>& cj);
double inclusion_score(const nln_model& m, std::size_t i, std::size_t j, const dataset& d);

constexpr double inclusion_tolerance = 1e-9;

// Drops each rule included in a same-target rule with a strictly higher bias.
stage_report eliminate_included_rules(nln_model& m, const dataset& d);

struct postprocess_config {
  discretize_strategy strategy = discretize_strategy::descending_selection;
  bool retrain = true;
  train_config retrain_cfg = retrain_defaults(0);
  bool eliminate_included = true;
};

std::vector<stage_report> postprocess(nln_model& m, const dataset& d, const postprocess_config& cfg = {});

// Concatenates discretized models, then prunes and re-adjusts biases on d.
nln_model merge_models(const std::vector<nln_model>& models, const dataset& d,
                       std::vector<stage_report>* reports = nullptr);

struct rule_subset {
  std::vector<std::size_t> rules;  // model rule indices
  double f1 = 0.0;
};

struct subset_search {
  std::vector<rule_subset> ranked;  // best first
  bool approximate = false;         // beam search was used
};

constexpr std::size_t exhaustive_subset_limit = 20;

// Scores subsets of the active rules with at most max_rules members by F1 on
// d (thresholds refitted per subset). Beyond exhaustive_subset_limit active
// rules a beam search is used instead.
subset_search find_minimal_subset(const nln_model& m, const dataset& d, std::size_t max_rules,
                                  std::size_t keep = 10, std::size_t beam_width = 64);

}  // namespace nln
