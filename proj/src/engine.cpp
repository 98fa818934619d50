#include "nln/engine.hpp"

#include <algorithm>

#include "nln/nodes.hpp"

namespace nln {

void row_state::resize(const nln_model& m) {
  const std::size_t nd = m.options.n_dichotomies;
  dich.assign(m.blocks.size() * nd, 0.0);
  intv.assign(m.blocks.size() * (nd + 1), 0.0);
  slot.assign(m.n_rules * m.n_slots(), 0.0);
  rule.assign(m.n_rules, 0.0);
  out.assign(m.n_outputs, 0.0);
}

void forward_row(const nln_model& m, const double* x, row_state& st) {
  const double* p = m.params.data();
  const std::size_t S = m.n_slots();
  if (st.rule.size() != m.n_rules || st.slot.size() != m.n_rules * S) st.resize(m);

  for (std::size_t b = 0; b < m.blocks.size(); ++b) {
    const auto& bl = m.blocks[b];
    const double v = x[bl.feature];
    if (is_missing(v)) continue;
    double* d = st.dich.data() + b * bl.n_dich;
    double* iv = st.intv.data() + b * bl.n_int;
    for (std::size_t k = 0; k < bl.n_dich; ++k)
      d[k] = sigmoid(p[bl.sharpness + k] * (v - p[bl.boundary + k]));
    for (std::size_t j = 0; j < bl.n_int; ++j) {
      const double* w = p + bl.weights + j * bl.n_dich;
      double prod = 1.0;
      for (std::size_t k = 0; k < bl.n_dich; ++k)
        if (w[k] != 0.0) prod *= and_factor(w[k], d[k]);
      iv[j] = prod;
    }
  }

  for (std::size_t r = 0; r < m.n_rules; ++r) {
    const std::size_t base = m.rule_offset(r);
    double* sv = st.slot.data() + r * S;
    double c = p[base + S];
    for (std::size_t s = 0; s < S; ++s) {
      const slot& sl = m.slots[s];
      const double v = x[sl.feature];
      double val;
      if (is_missing(v)) {
        val = p[base + sl.miss_offset];
      } else if (sl.kind == feature_kind::binary) {
        val = v;
      } else if (sl.kind == feature_kind::categorical) {
        val = p[base + sl.enc_offset + static_cast<std::size_t>(v)];
      } else {
        const std::size_t b = m.rule_block_index(r, s);
        val = interval_collection(p + base + sl.enc_offset, st.intv.data() + b * m.blocks[b].n_int,
                                  sl.width);
      }
      sv[s] = val;
      c *= and_factor(p[base + s], val);
    }
    st.rule[r] = clamp_unit(c);
  }

  for (std::size_t k = 0; k < m.n_outputs; ++k) {
    const double* w = p + m.out_base + k * m.n_rules;
    double prod = 1.0 - p[m.out_bias_base + k];
    for (std::size_t r = 0; r < m.n_rules; ++r)
      if (w[r] != 0.0) prod *= 1.0 - w[r] * st.rule[r];
    st.out[k] = clamp_unit(1.0 - prod);
  }
}

void backward_row(const nln_model& m, const double* x, const row_state& st, const double* d_out,
                  double* grad, grad_scratch& sc) {
  const double* p = m.params.data();
  const std::size_t R = m.n_rules, S = m.n_slots();
  const std::size_t width = std::max({R, S, m.options.n_dichotomies + 1});
  sc.f.resize(width);
  sc.rest.resize(width);
  sc.d_rule.assign(R, 0.0);
  sc.d_intv.assign(st.intv.size(), 0.0);
  sc.d_dich.assign(st.dich.size(), 0.0);

  for (std::size_t k = 0; k < m.n_outputs; ++k) {
    const double g = d_out[k];
    if (g == 0.0) continue;
    const double* w = p + m.out_base + k * R;
    const double one_minus_o = 1.0 - p[m.out_bias_base + k];
    double all = 1.0;
    for (std::size_t r = 0; r < R; ++r) {
      sc.f[r] = 1.0 - w[r] * st.rule[r];
      all *= sc.f[r];
    }
    others_product(sc.f.data(), R, sc.rest.data());
    grad[m.out_bias_base + k] += g * all;
    for (std::size_t r = 0; r < R; ++r) {
      const double t = g * one_minus_o * sc.rest[r];
      grad[m.out_base + k * R + r] += t * st.rule[r];
      sc.d_rule[r] += t * w[r];
    }
  }

  for (std::size_t r = 0; r < R; ++r) {
    const double dc = sc.d_rule[r];
    if (dc == 0.0) continue;
    const std::size_t base = m.rule_offset(r);
    const double* sv = st.slot.data() + r * S;
    const double a = p[base + S];
    double all = 1.0;
    for (std::size_t s = 0; s < S; ++s) {
      sc.f[s] = and_factor(p[base + s], sv[s]);
      all *= sc.f[s];
    }
    others_product(sc.f.data(), S, sc.rest.data());
    grad[base + S] += dc * all;
    for (std::size_t s = 0; s < S; ++s) {
      const double t = dc * a * sc.rest[s];
      const double A = p[base + s];
      grad[base + s] += t * and_factor_dw(A, sv[s]);
      const double dv = t * A;
      if (dv == 0.0) continue;
      const slot& sl = m.slots[s];
      const double v = x[sl.feature];
      if (is_missing(v)) {
        grad[base + sl.miss_offset] += dv;
      } else if (sl.kind == feature_kind::categorical) {
        grad[base + sl.enc_offset + static_cast<std::size_t>(v)] += dv;
      } else if (sl.kind == feature_kind::continuous) {
        const std::size_t bi = m.rule_block_index(r, s);
        const auto& bl = m.blocks[bi];
        const double* w = p + base + sl.enc_offset;
        const double* iv = st.intv.data() + bi * bl.n_int;
        double* di = sc.d_intv.data() + bi * bl.n_int;
        // slot = 1 - prod(1 - w_j I_j)
        double* f2 = sc.f.data() + S;  // scratch beyond the slot factors
        if (sc.f.size() < S + 2 * bl.n_int) {
          sc.f.resize(S + 2 * bl.n_int);
          f2 = sc.f.data() + S;
        }
        double* rest2 = f2 + bl.n_int;
        for (std::size_t j = 0; j < bl.n_int; ++j) f2[j] = 1.0 - w[j] * iv[j];
        others_product(f2, bl.n_int, rest2);
        for (std::size_t j = 0; j < bl.n_int; ++j) {
          grad[base + sl.enc_offset + j] += dv * rest2[j] * iv[j];
          di[j] += dv * rest2[j] * w[j];
        }
      }
    }
  }

  for (std::size_t b = 0; b < m.blocks.size(); ++b) {
    const auto& bl = m.blocks[b];
    const double v = x[bl.feature];
    if (is_missing(v)) continue;
    const double* d = st.dich.data() + b * bl.n_dich;
    const double* di = sc.d_intv.data() + b * bl.n_int;
    double* dd = sc.d_dich.data() + b * bl.n_dich;
    std::vector<double>& f = sc.f;
    std::vector<double>& rest = sc.rest;
    if (f.size() < bl.n_dich) f.resize(bl.n_dich);
    if (rest.size() < bl.n_dich) rest.resize(bl.n_dich);
    bool any = false;
    for (std::size_t j = 0; j < bl.n_int; ++j) {
      if (di[j] == 0.0) continue;
      any = true;
      const double* w = p + bl.weights + j * bl.n_dich;
      for (std::size_t k = 0; k < bl.n_dich; ++k) f[k] = and_factor(w[k], d[k]);
      others_product(f.data(), bl.n_dich, rest.data());
      for (std::size_t k = 0; k < bl.n_dich; ++k) {
        const double t = di[j] * rest[k];
        grad[bl.weights + j * bl.n_dich + k] += t * and_factor_dw(w[k], d[k]);
        dd[k] += t * w[k];
      }
    }
    if (!any) continue;
    for (std::size_t k = 0; k < bl.n_dich; ++k) {
      const double s = dd[k] * d[k] * (1.0 - d[k]);
      const double alpha = p[bl.sharpness + k];
      const double B = p[bl.boundary + k];
      grad[bl.boundary + k] -= s * alpha;
      grad[bl.sharpness + k] += s * (v - B);
    }
  }
}

}  // namespace nln
