#include "nln/nodes.hpp"

#include <cmath>
#include <string>

#include "nln/error.hpp"

namespace nln {

void others_product(const double* f, std::size_t n, double* out) {
  double acc = 1.0;
  for (std::size_t j = 0; j < n; ++j) {
    out[j] = acc;
    acc *= f[j];
  }
  acc = 1.0;
  for (std::size_t j = n; j-- > 0;) {
    out[j] *= acc;
    acc *= f[j];
  }
}

namespace {

void check_inputs(std::size_t fan_in, std::size_t given) {
  if (fan_in != given)
    throw dimension_error("node has fan-in " + std::to_string(fan_in) + " but got " +
                          std::to_string(given) + " inputs");
}

void check_or_domain(const or_node& node) {
  if (node.allow_negation) return;
  for (double w : node.weights)
    if (w < 0) throw domain_error("negative weight on an OR node without negation");
}

}  // namespace

double and_forward(const and_node& node, const std::vector<double>& inputs) {
  check_inputs(node.weights.size(), inputs.size());
  double p = node.bias;
  for (std::size_t j = 0; j < inputs.size(); ++j) p *= and_factor(node.weights[j], inputs[j]);
  return clamp_unit(p);
}

double or_forward(const or_node& node, const std::vector<double>& inputs) {
  check_inputs(node.weights.size(), inputs.size());
  check_or_domain(node);
  double p = 1.0 - node.bias;
  for (std::size_t j = 0; j < inputs.size(); ++j) p *= or_factor(node.weights[j], inputs[j]);
  return clamp_unit(1.0 - p);
}

node_gradients node_backward(const and_node& node, const std::vector<double>& inputs,
                             double upstream) {
  const std::size_t n = inputs.size();
  check_inputs(node.weights.size(), n);
  std::vector<double> f(n), rest(n);
  for (std::size_t j = 0; j < n; ++j) f[j] = and_factor(node.weights[j], inputs[j]);
  others_product(f.data(), n, rest.data());
  double all = 1.0;
  for (double v : f) all *= v;

  node_gradients g;
  g.d_bias = upstream * all;
  g.d_weights.resize(n);
  g.d_inputs.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    const double r = upstream * node.bias * rest[j];
    g.d_weights[j] = r * and_factor_dw(node.weights[j], inputs[j]);
    g.d_inputs[j] = r * node.weights[j];
  }
  return g;
}

node_gradients node_backward(const or_node& node, const std::vector<double>& inputs,
                             double upstream) {
  const std::size_t n = inputs.size();
  check_inputs(node.weights.size(), n);
  check_or_domain(node);
  std::vector<double> f(n), rest(n);
  for (std::size_t j = 0; j < n; ++j) f[j] = or_factor(node.weights[j], inputs[j]);
  others_product(f.data(), n, rest.data());
  double all = 1.0;
  for (double v : f) all *= v;

  node_gradients g;
  g.d_bias = upstream * all;
  g.d_weights.resize(n);
  g.d_inputs.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    const double r = upstream * (1.0 - node.bias) * rest[j];
    g.d_weights[j] = -r * or_factor_dw(node.weights[j], inputs[j], node.allow_negation);
    g.d_inputs[j] = r * node.weights[j];
  }
  return g;
}

or_node demorgan_dual(const and_node& node) {
  or_node d;
  d.weights.reserve(node.weights.size());
  for (double w : node.weights) d.weights.push_back(-w);
  d.bias = 1.0 - node.bias;
  d.allow_negation = true;
  return d;
}

and_node demorgan_dual(const or_node& node) {
  and_node d;
  d.weights.reserve(node.weights.size());
  for (double w : node.weights) d.weights.push_back(-w);
  d.bias = 1.0 - node.bias;
  return d;
}

namespace {

void check_crisp(const std::vector<double>& weights, const std::vector<int>& inputs) {
  check_inputs(weights.size(), inputs.size());
  for (double w : weights)
    if (w != -1.0 && w != 0.0 && w != 1.0)
      throw precondition_error("crisp evaluation needs weights in {-1,0,1}");
  for (int x : inputs)
    if (x != 0 && x != 1) throw precondition_error("crisp evaluation needs binary inputs");
}

}  // namespace

int crisp_eval(const and_node& node, const std::vector<int>& inputs) {
  check_crisp(node.weights, inputs);
  if (node.bias != 1.0) throw precondition_error("crisp AND needs bias 1");
  for (std::size_t j = 0; j < inputs.size(); ++j) {
    if (node.weights[j] > 0 && inputs[j] == 0) return 0;
    if (node.weights[j] < 0 && inputs[j] == 1) return 0;
  }
  return 1;
}

int crisp_eval(const or_node& node, const std::vector<int>& inputs) {
  check_crisp(node.weights, inputs);
  if (node.bias != 0.0) throw precondition_error("crisp OR needs bias 0");
  for (std::size_t j = 0; j < inputs.size(); ++j) {
    if (node.weights[j] > 0 && inputs[j] == 1) return 1;
    if (node.weights[j] < 0 && inputs[j] == 0) return 1;
  }
  return 0;
}

}  // namespace nln
