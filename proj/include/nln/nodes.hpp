#pragma once

#include <cstddef>
#include <vector>

namespace nln {

// Single-weight literal factors. A positive weight w marks a necessary
// (AND) or sufficient (OR) input, a negative one its contrary.
inline double and_factor(double w, double c) {
  if (w > 0) return 1.0 - w * (1.0 - c);
  if (w < 0) return 1.0 + w * c;
  return 1.0;
}

// d(and_factor)/dw; at w = 0 the two one-sided slopes are summed.
inline double and_factor_dw(double w, double c) {
  if (w > 0) return -(1.0 - c);
  if (w < 0) return c;
  return 2.0 * c - 1.0;
}

inline double or_factor(double w, double c) {
  if (w > 0) return 1.0 - w * c;
  if (w < 0) return 1.0 + w * (1.0 - c);
  return 1.0;
}

// d(or_factor)/dw. Nonnegative-domain weights only have a right slope at 0.
inline double or_factor_dw(double w, double c, bool signed_domain = true) {
  if (w > 0) return -c;
  if (w < 0) return 1.0 - c;
  return signed_domain ? 1.0 - 2.0 * c : -c;
}

inline double clamp_unit(double v) { return v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v); }

// out[j] = prod_{i != j} f[i], without division.
void others_product(const double* f, std::size_t n, double* out);

struct and_node {
  std::vector<double> weights;
  double bias = 1.0;
};

struct or_node {
  std::vector<double> weights;
  double bias = 0.0;
  bool allow_negation = true;
};

struct node_gradients {
  std::vector<double> d_weights;
  double d_bias = 0.0;
  std::vector<double> d_inputs;
};

double and_forward(const and_node& node, const std::vector<double>& inputs);
double or_forward(const or_node& node, const std::vector<double>& inputs);

node_gradients node_backward(const and_node& node, const std::vector<double>& inputs,
                             double upstream);
node_gradients node_backward(const or_node& node, const std::vector<double>& inputs,
                             double upstream);

or_node demorgan_dual(const and_node& node);
and_node demorgan_dual(const or_node& node);

int crisp_eval(const and_node& node, const std::vector<int>& inputs);
int crisp_eval(const or_node& node, const std::vector<int>& inputs);

}  // namespace nln
