#pragma once
// Small schemas and datasets shared by the unit tests.

#include <functional>
#include <random>
#include <sstream>
#include <string>

#include "nln/dataset.hpp"
#include "nln/schema.hpp"

namespace fixture {

inline nln::schema parse(const std::string& text) {
  std::istringstream in(text);
  return nln::parse_schema(in);
}

// One feature of each kind, a missing-capable categorical and continuous.
inline nln::schema mixed_schema(bool multiclass = false) {
  return parse(std::string("b binary\n"
                           "color categorical r g b missing\n"
                           "size continuous 0 10 missing\n") +
               (multiclass ? "y class lo mid hi\n" : "y target\n"));
}

// Random rows for a schema; missing entries with probability p_missing.
inline nln::dataset random_rows(const nln::schema& s, std::size_t n, std::uint64_t seed,
                                double p_missing = 0.1) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0, 1);
  nln::dataset d;
  d.schema = s;
  d.n_rows = n;
  const std::size_t K = s.n_outputs();
  for (std::size_t r = 0; r < n; ++r) {
    for (const auto& f : s.features) {
      if (f.allows_missing && u(rng) < p_missing) {
        d.x.push_back(std::nan(""));
        continue;
      }
      switch (f.kind) {
        case nln::feature_kind::binary: d.x.push_back(u(rng) < 0.5 ? 0.0 : 1.0); break;
        case nln::feature_kind::categorical:
          d.x.push_back(static_cast<double>(static_cast<std::size_t>(u(rng) * f.values.size())));
          break;
        case nln::feature_kind::continuous: d.x.push_back(f.lo + (f.hi - f.lo) * u(rng)); break;
      }
    }
    if (s.task() == nln::task_kind::multiclass) {
      const std::size_t c = static_cast<std::size_t>(u(rng) * K);
      for (std::size_t k = 0; k < K; ++k) d.y.push_back(k == c ? 1.0 : 0.0);
    } else {
      for (std::size_t k = 0; k < K; ++k) d.y.push_back(u(rng) < 0.5 ? 1.0 : 0.0);
    }
  }
  return d;
}

// Every assignment of n binary features x0..x{n-1}, single target from fn.
inline nln::dataset exhaustive_binary(std::size_t n, const std::function<bool(const std::vector<int>&)>& fn) {
  std::string text;
  for (std::size_t i = 0; i < n; ++i) text += "x" + std::to_string(i) + " binary\n";
  text += "y target\n";
  nln::dataset d;
  d.schema = parse(text);
  d.n_rows = std::size_t{1} << n;
  std::vector<int> bits(n);
  for (std::size_t r = 0; r < d.n_rows; ++r) {
    for (std::size_t i = 0; i < n; ++i) {
      bits[i] = static_cast<int>((r >> i) & 1U);
      d.x.push_back(bits[i]);
    }
    d.y.push_back(fn(bits) ? 1.0 : 0.0);
  }
  return d;
}

}  // namespace fixture
