#pragma once

#include <vector>

#include "nln/model.hpp"

namespace nln {

// Activations of one row, kept for the backward pass.
struct row_state {
  std::vector<double> dich;  // blocks * n_dich
  std::vector<double> intv;  // blocks * n_int
  std::vector<double> slot;  // rules * slots
  std::vector<double> rule;  // rules
  std::vector<double> out;   // outputs
  void resize(const nln_model& m);
};

struct grad_scratch {
  std::vector<double> f, rest, d_rule, d_intv, d_dich;
};

void forward_row(const nln_model& m, const double* x, row_state& st);

// Adds d(loss)/d(params) into grad given d(loss)/d(outputs).
void backward_row(const nln_model& m, const double* x, const row_state& st, const double* d_out,
                  double* grad, grad_scratch& sc);

// Value of a continuous slot from interval activations.
inline double interval_collection(const double* w, const double* intv, std::size_t n) {
  double p = 1.0;
  for (std::size_t j = 0; j < n; ++j) p *= 1.0 - w[j] * intv[j];
  return 1.0 - p;
}

}  // namespace nln
