#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "nln/dataset.hpp"
#include "nln/model.hpp"

namespace nln {

struct train_config {
  double lambda_nonempty = 1e-1;
  double lambda_sparsity = 1e-3;
  double learning_rate = 3e-3;
  std::size_t batch_size = 64;
  std::size_t max_epochs = 2000;
  std::size_t patience = 200;
  double validation_fraction = 0.2;
  std::uint64_t seed = 0;
  double dead_rule_epsilon = 1e-3;
  bool reset_dead = true;
  bool continuous_only = false;  // train biases, dichotomies and missing weights only
  bool verbose = false;
  void validate() const;
};

struct loss_breakdown {
  double l2 = 0.0;
  double nonempty = 0.0;
  double sparsity = 0.0;
  double total = 0.0;
};

// Loss over the given rows (all rows when empty).
loss_breakdown compute_loss(const nln_model& m, const dataset& d, const train_config& cfg = {},
                            const std::vector<std::size_t>& rows = {});

// Same loss; grad (resized to the parameter count) receives its gradient.
loss_breakdown loss_and_gradient(const nln_model& m, const dataset& d, const train_config& cfg,
                                 const std::vector<std::size_t>& rows, std::vector<double>& grad);

// Mean squared error over rows (all when empty), without regularizers.
double data_loss(const nln_model& m, const dataset& d, const std::vector<std::size_t>& rows = {});

struct adam_state {
  std::vector<double> m, v;
  std::size_t t = 0;
  double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  void reset(std::size_t n);
};

// Plain ADAM update of x; entries with frozen[i] != 0 are left untouched.
void adam_update(std::vector<double>& x, const std::vector<double>& grad, adam_state& state,
                 double learning_rate, const std::vector<char>* frozen = nullptr);

// One ADAM update followed by projection onto the parameter domains.
loss_breakdown train_step(nln_model& m, const dataset& d, const std::vector<std::size_t>& batch,
                          adam_state& state, const train_config& cfg);

bool rule_is_dead(const nln_model& m, std::size_t r, double eps);

// Re-initializes dead rules with zero outgoing weights. Returns the count.
std::size_t reset_dead_rules(nln_model& m, double eps, std::uint64_t seed,
                             adam_state* state = nullptr);

struct epoch_record {
  std::size_t epoch = 0;
  loss_breakdown train;  // mean over the epoch's minibatches
  double valid_l2 = 0.0;  // early-stopping criterion
  std::size_t resets = 0;
};

struct train_history {
  std::vector<epoch_record> epochs;
  std::size_t best_epoch = 0;  // 0 = initial parameters
  bool stratified = true;
};

struct split_result {
  std::vector<std::size_t> train, valid;
  bool stratified = true;
};

split_result stratified_split(const dataset& d, double valid_fraction, std::uint64_t seed);

train_history fit(nln_model& m, const dataset& d, const train_config& cfg);

void write_history_csv(std::ostream& out, const train_history& h);

}  // namespace nln
