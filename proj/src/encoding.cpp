#include "nln/encoding.hpp"

#include <algorithm>

#include "nln/error.hpp"

namespace nln {

one_hot one_hot_encode(const feature& f, const std::string& raw, const std::string& missing_token) {
  if (f.kind != feature_kind::categorical)
    throw schema_error("'" + f.name + "' is not categorical");
  one_hot out;
  out.bits.assign(f.values.size(), 0);
  if (raw.empty() || raw == missing_token) {
    if (!f.allows_missing) throw schema_error("'" + f.name + "' does not allow missing values");
    out.missing = true;
    return out;
  }
  auto it = std::find(f.values.begin(), f.values.end(), raw);
  if (it == f.values.end()) throw schema_error("undeclared value '" + raw + "' for '" + f.name + "'");
  out.bits[static_cast<std::size_t>(it - f.values.begin())] = 1;
  return out;
}

double dichotomy_eval(const fuzzy_dichotomy& d, double x) {
  if (!(d.sharpness > 0)) throw domain_error("dichotomy sharpness must be positive");
  return sigmoid(d.sharpness * (x - d.boundary));
}

std::vector<double> continuous_encoder::dichotomy_values(double x) const {
  std::vector<double> v(dichotomies.size());
  for (std::size_t k = 0; k < v.size(); ++k) v[k] = dichotomy_eval(dichotomies[k], x);
  return v;
}

std::vector<double> continuous_encoder::interval_values(double x) const {
  const auto d = dichotomy_values(x);
  const std::size_t nd = d.size();
  std::vector<double> out(n_intervals);
  for (std::size_t j = 0; j < n_intervals; ++j) {
    double p = 1.0;
    for (std::size_t k = 0; k < nd; ++k) p *= and_factor(interval_weights[j * nd + k], d[k]);
    out[j] = p;
  }
  return out;
}

continuous_encoder init_dichotomies_regular(double lo, double hi, std::size_t count, double k) {
  if (count == 0) throw schema_error("need at least one dichotomy");
  if (!std::isfinite(lo) || !std::isfinite(hi)) throw schema_error("continuous range must be finite");
  if (!(lo < hi)) throw schema_error("degenerate continuous range");
  continuous_encoder e;
  const double width = hi - lo;
  const double step = width / static_cast<double>(count + 1);
  const double alpha = static_cast<double>(count) * k / width;
  for (std::size_t i = 0; i < count; ++i)
    e.dichotomies.push_back({lo + step * static_cast<double>(i + 1), alpha});
  e.n_intervals = count + 1;
  e.interval_weights.assign(e.n_intervals * count, 0.0);
  for (std::size_t j = 0; j < e.n_intervals; ++j) {
    if (j > 0) e.interval_weights[j * count + (j - 1)] = 1.0;
    if (j < count) e.interval_weights[j * count + j] = -1.0;
  }
  return e;
}

double equivalency_forward(const equivalency_class& e, const one_hot& v) {
  if (v.bits.size() != e.weights.size()) throw dimension_error("one-hot width mismatch");
  if (v.missing) {
    if (!e.has_missing) throw data_error("missing value where the feature forbids it");
    return missing_value_forward(e.missing_weight);
  }
  std::vector<double> in(v.bits.begin(), v.bits.end());
  return or_forward(or_node{e.weights, 0.0, false}, in);
}

}  // namespace nln
