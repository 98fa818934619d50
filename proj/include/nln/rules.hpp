#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "nln/dataset.hpp"
#include "nln/model.hpp"
#include "nln/schema.hpp"

namespace nln {

// x >= boundary when above, x < boundary otherwise; fuzzy with the sharpness.
struct dichotomy_condition {
  bool above = true;
  double boundary = 0.0;
  double sharpness = 1.0;
};

// Conjunction of dichotomy conditions: one fuzzy interval.
struct interval_clause {
  std::vector<dichotomy_condition> conditions;
};

struct literal {
  std::size_t feature = 0;
  feature_kind kind = feature_kind::binary;
  bool positive = true;                   // false: the literal is negated
  std::vector<std::size_t> values;        // categorical (or missing-capable binary) value set
  std::vector<interval_clause> intervals; // continuous: union of intervals
  bool has_missing = false;
  double missing = 0.0;  // probability the literal holds when the value is missing
};

struct rule {
  std::vector<literal> literals;  // schema order, one per feature
  std::size_t target = 0;
  double bias = 1.0;
  double coverage = 0.0;  // unbiased activation mass on the data it was extracted with
  std::size_t source = 0; // rule index in the model
};

struct logic_program {
  nln::schema schema;
  std::vector<std::string> targets;
  std::vector<double> target_bias;
  std::vector<rule> rules;  // grouped by target, most covering first

  // Target probabilities, computed with the fuzzy semantics of the model.
  std::vector<double> evaluate(const double* row) const;
  double literal_value(const literal& l, const double* row) const;
};

// One rule per (rule module, target) with a nonzero output weight. When d is
// given, rules are ordered by coverage on d.
logic_program extract_program(const nln_model& m, const dataset* d = nullptr);

// Equivalent number of input nodes: 1 per binary feature, values used per
// categorical feature, distinct boundaries per continuous feature.
std::size_t rule_size(const rule& r);
std::size_t literal_size(const literal& l);
double mean_rule_size(const logic_program& p);

struct render_options {
  int digits = 4;         // significant digits of boundaries and sharpnesses
  int bias_decimals = 2;  // decimals of biases and missing-value weights
};

void render_text(std::ostream& out, const logic_program& p, const render_options& opt = {});
std::string render_text(const logic_program& p, const render_options& opt = {});
logic_program parse_text(const std::string& text, const schema& s);

// Literal text without its negation, as shown in rule lines and graph nodes.
std::string render_atom(const literal& l, const schema& s, int digits);

void render_graph(std::ostream& out, const logic_program& p, const render_options& opt = {});

struct coverage_row {
  std::size_t rule = 0;
  std::string target;  // empty for a dead rule
  std::vector<double> mass;        // per class column
  std::vector<double> class_rows;  // dataset rows in each class column
  double total = 0.0;
};

struct coverage_table {
  std::vector<std::string> columns;  // class labels
  std::vector<coverage_row> rows;
};

// Unbiased activation mass of every model rule split by true class. For a
// binary task the columns are the positive and negative rows of the rule's
// target.
coverage_table coverage_breakdown(const nln_model& m, const dataset& d);
void write_coverage_text(std::ostream& out, const coverage_table& t);
void write_coverage_csv(std::ostream& out, const coverage_table& t);

}  // namespace nln
