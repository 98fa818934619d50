#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "nln/nodes.hpp"
#include "nln/schema.hpp"

namespace nln {

inline double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

struct one_hot {
  std::vector<int> bits;
  bool missing = false;
};

one_hot one_hot_encode(const feature& f, const std::string& raw,
                       const std::string& missing_token = "?");

struct fuzzy_dichotomy {
  double boundary = 0.0;
  double sharpness = 1.0;
};

double dichotomy_eval(const fuzzy_dichotomy& d, double x);

constexpr std::size_t default_dichotomies = 32;
constexpr double default_sharpness_k = 8.0;

// Shared encoding of one continuous feature: dichotomies feed interval AND
// nodes (no bias) whose weights form an n_intervals x n_dichotomies matrix.
struct continuous_encoder {
  std::vector<fuzzy_dichotomy> dichotomies;
  std::size_t n_intervals = 0;
  std::vector<double> interval_weights;

  std::vector<double> dichotomy_values(double x) const;
  std::vector<double> interval_values(double x) const;
};

// Boundaries split [lo, hi] into count + 1 equal cells; sharpness is
// count * k / (hi - lo). Interval j is (B_j, B_{j+1}) with one literal at the ends.
continuous_encoder init_dichotomies_regular(double lo, double hi, std::size_t count,
                                            double k = default_sharpness_k);

// Per-rule OR over the one-hot values of a categorical feature, bias fixed at 0.
struct equivalency_class {
  std::vector<double> weights;
  double missing_weight = 0.0;
  bool has_missing = false;
};

double equivalency_forward(const equivalency_class& e, const one_hot& v);

// What a rule receives from a feature whose value is missing.
inline double missing_value_forward(double missing_weight) {
  return or_forward(or_node{{missing_weight}, 0.0, false}, {1.0});
}

}  // namespace nln
