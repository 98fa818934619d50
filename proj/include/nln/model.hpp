#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "nln/dataset.hpp"
#include "nln/encoding.hpp"
#include "nln/schema.hpp"

namespace nln {

enum class param_kind : std::uint8_t {
  and_weight,       // rule AND weight, [-1,1]
  and_bias,         // rule AND bias a, [0,1]
  class_weight,     // equivalency-class OR weight, [0,1]
  interval_choice,  // per-rule OR over fuzzy intervals, [0,1]
  missing_weight,   // per-rule missing-value weight, [0,1], never discretized
  interval_weight,  // shared interval AND weight, [-1,1]
  boundary,         // dichotomy boundary B
  sharpness,        // dichotomy sharpness alpha, [alpha_min, inf)
  out_weight,       // output OR weight, [0,1]
  out_bias,         // output OR bias o, [0,1]
};

bool is_logical_weight(param_kind k);
bool is_signed_weight(param_kind k);
bool is_continuous_param(param_kind k);

// One rule-module input. Binary features with missing values become
// two-valued categorical slots.
struct slot {
  feature_kind kind = feature_kind::binary;
  std::size_t feature = 0;
  std::size_t width = 0;  // categorical values or intervals
  std::size_t block = 0;  // continuous block index
  bool missing = false;
  bool promoted = false;  // binary feature encoded as categorical {0,1}
  std::size_t enc_offset = 0;   // rule-relative
  std::size_t miss_offset = 0;  // rule-relative, valid when missing
};

struct block_layout {
  std::size_t feature = 0;
  std::size_t n_dich = 0, n_int = 0;
  std::size_t boundary = 0, sharpness = 0, weights = 0;  // absolute offsets
};

struct model_options {
  std::size_t n_dichotomies = default_dichotomies;
  double sharpness_k = default_sharpness_k;
  double sharpness_min = 1e-9;
};

struct nln_model {
  nln::schema schema;
  model_options options;
  std::vector<slot> slots;
  // Continuous encoders come in sets; a merged model keeps one set per
  // source model and every rule reads from its own set.
  std::vector<block_layout> blocks;  // n_sets * n_continuous, set-major
  std::size_t n_sets = 1;
  std::vector<std::uint32_t> rule_set;
  std::size_t n_rules = 0, n_outputs = 0;
  std::size_t rule_base = 0, rule_stride = 0, out_base = 0, out_bias_base = 0;
  std::vector<double> params;
  std::vector<param_kind> kinds;
  std::vector<double> thresholds;  // binary task, one per output; empty = unfitted
  bool discretized = false;
  bool postprocessed = false;

  std::size_t n_slots() const { return slots.size(); }
  task_kind task() const { return schema.task(); }

  std::size_t rule_offset(std::size_t r) const { return rule_base + r * rule_stride; }
  std::size_t and_weight_index(std::size_t r, std::size_t s) const { return rule_offset(r) + s; }
  std::size_t and_bias_index(std::size_t r) const { return rule_offset(r) + slots.size(); }
  std::size_t enc_index(std::size_t r, std::size_t s, std::size_t v) const {
    return rule_offset(r) + slots[s].enc_offset + v;
  }
  std::size_t miss_index(std::size_t r, std::size_t s) const {
    return rule_offset(r) + slots[s].miss_offset;
  }
  std::size_t out_weight_index(std::size_t k, std::size_t r) const { return out_base + k * n_rules + r; }
  std::size_t out_bias_index(std::size_t k) const { return out_bias_base + k; }

  double& and_weight(std::size_t r, std::size_t s) { return params[and_weight_index(r, s)]; }
  double and_weight(std::size_t r, std::size_t s) const { return params[and_weight_index(r, s)]; }
  double& and_bias(std::size_t r) { return params[and_bias_index(r)]; }
  double and_bias(std::size_t r) const { return params[and_bias_index(r)]; }
  double& out_weight(std::size_t k, std::size_t r) { return params[out_weight_index(k, r)]; }
  double out_weight(std::size_t k, std::size_t r) const { return params[out_weight_index(k, r)]; }
  double& out_bias(std::size_t k) { return params[out_bias_index(k)]; }
  double out_bias(std::size_t k) const { return params[out_bias_index(k)]; }

  std::size_t n_continuous() const { return n_sets == 0 ? 0 : blocks.size() / n_sets; }
  const block_layout& rule_block(std::size_t r, std::size_t s) const {
    return blocks[rule_set[r] * n_continuous() + slots[s].block];
  }
  std::size_t rule_block_index(std::size_t r, std::size_t s) const {
    return rule_set[r] * n_continuous() + slots[s].block;
  }

  continuous_encoder encoder(std::size_t block) const;

  // Preprocessing nodes: shared dichotomies and intervals plus per-rule
  // equivalency classes and interval collections.
  std::size_t preprocessing_nodes() const;
  std::size_t parameter_count() const { return params.size(); }
};

// Wires the layout and initializes every parameter from seed.
nln_model build_model(const schema& s, std::size_t n_rules, std::size_t n_targets,
                      std::uint64_t seed, const model_options& opt = {});

// Logical weights U(-1,1) (U(0,1) for nonnegative ones), a = 1, o = 0,
// continuous encoders regular.
void initialize(nln_model& m, std::uint64_t seed);
void reset_rule(nln_model& m, std::size_t r, std::uint64_t seed);

void project(nln_model& m);
void project_param(const nln_model& m, std::size_t i, double& v);

struct prediction {
  std::vector<double> probabilities;
  std::vector<int> labels;  // multiclass: one class index; binary: 0/1 per output
};

// Rule-module input slots of one rule on one row.
std::vector<double> encoder_forward(const nln_model& m, const double* row, std::size_t rule);
std::vector<double> model_forward(const nln_model& m, const double* row);
std::vector<int> predict(const nln_model& m, const std::vector<double>& probabilities);
prediction predict_row(const nln_model& m, const double* row);

// Rule activation without its bias, per row.
std::vector<double> rule_activation_unbiased(const nln_model& m, const dataset& d, std::size_t rule);

nln_model keep_rules(const nln_model& m, const std::vector<std::size_t>& rules);
nln_model concatenate(const std::vector<nln_model>& models);

void save_model(std::ostream& out, const nln_model& m);
nln_model load_model(std::istream& in);
void save_model(const std::string& path, const nln_model& m);
nln_model load_model(const std::string& path);

}  // namespace nln
