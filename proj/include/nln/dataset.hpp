#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "nln/schema.hpp"

namespace nln {

// Feature values are stored as doubles: binary 0/1, categorical value index,
// continuous raw value. NaN marks a missing entry.
struct dataset {
  nln::schema schema;
  std::size_t n_rows = 0;
  std::vector<double> x;  // n_rows * n_features
  std::vector<double> y;  // n_rows * n_outputs, entries 0/1

  std::size_t n_features() const { return schema.features.size(); }
  std::size_t n_outputs() const { return schema.n_outputs(); }
  const double* row(std::size_t r) const { return x.data() + r * n_features(); }
  const double* target(std::size_t r) const { return y.data() + r * n_outputs(); }
  double value(std::size_t r, std::size_t f) const { return x[r * n_features() + f]; }

  dataset subset(const std::vector<std::size_t>& rows) const;
  void append(const dataset& other);
};

inline bool is_missing(double v) { return std::isnan(v); }

// Stratum of every row: the class for multiclass data, the label for a single
// binary target, -1 for multilabel data (no stratification).
std::vector<int> strata(const dataset& d);

dataset load_csv(const std::string& path, const schema& s, const std::string& missing_token = "?");
dataset load_csv(const std::string& path, const std::string& schema_path,
                 const std::string& missing_token = "?");
dataset parse_csv(const std::string& text, const schema& s, const std::string& missing_token = "?");

// Continuous features without a declared range take the min/max seen in d.
// Constant columns are widened by 0.5 on each side.
schema with_data_ranges(const schema& s, const dataset& d);

std::vector<std::string> split_csv_line(const std::string& line);

}  // namespace nln
