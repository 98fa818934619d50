#include "nln/oracle.hpp"

#include <cmath>
#include <ostream>
#include <random>
#include <unordered_map>

#include "nln/error.hpp"
#include "nln/nodes.hpp"

namespace nln {

std::size_t layer_graph::width(std::size_t layer) const {
  return layer == 0 ? n_inputs : layers.at(layer - 1).size();
}

void layer_graph::validate() const {
  for (std::size_t l = 0; l < layers.size(); ++l)
    for (const auto& n : layers[l]) {
      if (n.weights.size() != width(l)) throw dimension_error("node weight count differs from previous layer width");
      if (n.bias < 0.0 || n.bias > 1.0) throw domain_error("node bias outside [0,1]");
      for (double w : n.weights)
        if (w < -1.0 || w > 1.0) throw domain_error("node weight outside [-1,1]");
    }
}

double joint_distribution::total() const {
  double s = 0.0;
  for (double v : p) s += v;
  return s;
}

std::vector<double> joint_distribution::marginals() const {
  std::vector<double> m(n, 0.0);
  for (std::size_t s = 0; s < p.size(); ++s)
    for (std::size_t i = 0; i < n; ++i)
      if (s >> i & 1U) m[i] += p[s];
  return m;
}

namespace {

void check_width(std::size_t n, std::size_t guard) {
  if (n > guard || n >= 63)
    throw capacity_error("layer width " + std::to_string(n) + " exceeds the enumeration guard of " +
                         std::to_string(guard));
}

// Product distribution over n independent bits, built by doubling.
void product_into(const std::vector<double>& q, double scale, std::vector<double>& buf,
                  std::vector<double>& acc) {
  buf.assign(std::size_t{1} << q.size(), 0.0);
  buf[0] = scale;
  std::size_t len = 1;
  for (double qi : q) {
    for (std::size_t s = 0; s < len; ++s) {
      buf[s + len] = buf[s] * qi;
      buf[s] *= 1.0 - qi;
    }
    len <<= 1;
  }
  for (std::size_t s = 0; s < buf.size(); ++s) acc[s] += buf[s];
}

}  // namespace

joint_distribution independent_joint(const std::vector<double>& probs, std::size_t guard) {
  check_width(probs.size(), guard);
  for (double p : probs)
    if (!(p >= 0.0 && p <= 1.0)) throw domain_error("input probability outside [0,1]");
  joint_distribution j;
  j.n = probs.size();
  j.p.assign(std::size_t{1} << j.n, 0.0);
  std::vector<double> buf;
  product_into(probs, 1.0, buf, j.p);
  return j;
}

double conditional_probability(const graph_node& node, std::uint64_t prev_state) {
  // Same operation order as the factorized nodes, so single layers agree bit for bit.
  double p = node.is_or ? 1.0 - node.bias : node.bias;
  for (std::size_t i = 0; i < node.weights.size(); ++i) {
    const double c = static_cast<double>(prev_state >> i & 1U);
    p *= node.is_or ? or_factor(node.weights[i], c) : and_factor(node.weights[i], c);
  }
  return clamp_unit(node.is_or ? 1.0 - p : p);
}

joint_distribution exact_layer_transition(const std::vector<graph_node>& layer,
                                          const joint_distribution& prev, std::size_t guard) {
  check_width(prev.n, guard);
  check_width(layer.size(), guard);
  for (const auto& n : layer)
    if (n.weights.size() != prev.n) throw dimension_error("node weight count differs from previous layer width");
  joint_distribution out;
  out.n = layer.size();
  out.p.assign(std::size_t{1} << out.n, 0.0);
  std::vector<double> q(layer.size()), buf;
  for (std::uint64_t s = 0; s < prev.p.size(); ++s) {
    if (prev.p[s] == 0.0) continue;
    for (std::size_t j = 0; j < layer.size(); ++j) q[j] = conditional_probability(layer[j], s);
    product_into(q, prev.p[s], buf, out.p);
  }
  return out;
}

std::vector<std::vector<double>> exact_marginals(const layer_graph& g, const std::vector<double>& input_probs,
                                                 std::size_t guard) {
  g.validate();
  if (input_probs.size() != g.n_inputs) throw dimension_error("input probability count differs from input width");
  std::vector<std::vector<double>> out{input_probs};
  auto joint = independent_joint(input_probs, guard);
  for (const auto& layer : g.layers) {
    // P[node] = sum over previous states of P[state] * P[node | state].
    std::vector<double> m(layer.size(), 0.0);
    for (std::uint64_t s = 0; s < joint.p.size(); ++s) {
      if (joint.p[s] == 0.0) continue;
      for (std::size_t j = 0; j < layer.size(); ++j) m[j] += joint.p[s] * conditional_probability(layer[j], s);
    }
    out.push_back(std::move(m));
    if (out.size() <= g.layers.size()) joint = exact_layer_transition(layer, joint, guard);
  }
  return out;
}

std::vector<std::vector<double>> factorized_marginals(const layer_graph& g, const std::vector<double>& input_probs) {
  g.validate();
  if (input_probs.size() != g.n_inputs) throw dimension_error("input probability count differs from input width");
  std::vector<std::vector<double>> out{input_probs};
  for (const auto& layer : g.layers) {
    std::vector<double> next;
    next.reserve(layer.size());
    for (const auto& n : layer)
      next.push_back(n.is_or ? or_forward(or_node{n.weights, n.bias, true}, out.back())
                             : and_forward(and_node{n.weights, n.bias}, out.back()));
    out.push_back(std::move(next));
  }
  return out;
}

bool is_decomposable(const layer_graph& g) {
  g.validate();
  // Ancestor sets over the input nodes and every earlier node, as flags.
  std::vector<std::vector<std::vector<bool>>> anc;  // [layer][node][global id]
  std::size_t total = g.n_inputs;
  for (const auto& l : g.layers) total += l.size();
  std::vector<std::vector<bool>> cur;
  for (std::size_t i = 0; i < g.n_inputs; ++i) {
    cur.emplace_back(total, false);
    cur.back()[i] = true;
  }
  std::size_t base = g.n_inputs;
  for (const auto& layer : g.layers) {
    std::vector<std::vector<bool>> next;
    for (std::size_t j = 0; j < layer.size(); ++j) {
      std::vector<bool> a(total, false);
      for (std::size_t i = 0; i < layer[j].weights.size(); ++i)
        if (layer[j].weights[i] != 0.0)
          for (std::size_t t = 0; t < total; ++t)
            if (cur[i][t]) a[t] = true;
      for (std::size_t t = 0; t < total; ++t)
        if (a[t])
          for (std::size_t k = 0; k < j; ++k)
            if (next[k][t]) return false;
      next.push_back(a);
    }
    for (std::size_t j = 0; j < layer.size(); ++j) next[j][base + j] = true;
    base += layer.size();
    cur = std::move(next);
  }
  return true;
}

namespace {

std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace

layer_graph random_and_network(std::size_t width, std::size_t depth, std::uint64_t seed,
                               std::vector<double>* input_probs) {
  if (width == 0) throw precondition_error("network width must be positive");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> pick(0, width - 1);
  auto sign = [&] { return u(rng) < 0.5 ? 1.0 : -1.0; };

  layer_graph g;
  g.n_inputs = width;
  std::vector<double> p(width);
  for (auto& v : p) v = u(rng);
  for (std::size_t l = 0; l < depth; ++l) {
    std::vector<graph_node> layer(width);
    for (auto& n : layer) {
      n.weights.resize(width);
      for (auto& w : n.weights) {
        const double r = u(rng);
        w = r < 0.5 ? 0.0 : (r < 0.75 ? 1.0 : -1.0);
      }
      n.bias = u(rng);
    }
    for (auto& n : layer) {
      bool empty = true;
      for (double w : n.weights) empty = empty && w == 0.0;
      if (empty) n.weights[pick(rng)] = sign();
    }
    for (std::size_t i = 0; i < width; ++i) {
      bool unused = true;
      for (const auto& n : layer) unused = unused && n.weights[i] == 0.0;
      if (unused) layer[pick(rng)].weights[i] = sign();
    }
    g.layers.push_back(std::move(layer));
  }
  if (input_probs) *input_probs = p;
  return g;
}

std::vector<gap_row> assumption_gap_experiment(const gap_config& cfg) {
  if (cfg.width == 0 || cfg.width > 6) throw capacity_error("assumption gap experiment needs a width in 1..6");
  if (cfg.depth == 0 || cfg.trials == 0 || cfg.points == 0)
    throw precondition_error("depth, trials and points must be positive");
  const std::size_t w = cfg.width;
  std::vector<gap_row> rows(cfg.depth);
  for (std::size_t l = 0; l < cfg.depth; ++l) rows[l] = {w, l + 1, 0.0, 0.0};

  for (std::size_t t = 0; t < cfg.trials; ++t) {
    std::vector<double> probs;
    const auto g = random_and_network(w, cfg.depth, stream_seed(cfg.seed, 2 * t), &probs);
    std::mt19937_64 rng(stream_seed(cfg.seed, 2 * t + 1));
    std::uniform_real_distribution<double> u(0.0, 1.0);

    // Predictions depend only on the input row: cache both per input state.
    std::unordered_map<std::uint64_t, std::pair<std::vector<std::vector<double>>, std::vector<std::vector<double>>>> cache;
    std::vector<double> sq_fact(cfg.depth, 0.0), sq_exact(cfg.depth, 0.0);
    std::vector<double> x(w);
    std::vector<int> prev(w), next(w);
    for (std::size_t pt = 0; pt < cfg.points; ++pt) {
      std::uint64_t key = 0;
      for (std::size_t i = 0; i < w; ++i) {
        prev[i] = u(rng) < probs[i] ? 1 : 0;
        x[i] = prev[i];
        key |= static_cast<std::uint64_t>(prev[i]) << i;
      }
      auto it = cache.find(key);
      if (it == cache.end())
        it = cache.emplace(key, std::make_pair(factorized_marginals(g, x), exact_marginals(g, x))).first;
      const auto& [fact, exact] = it->second;
      for (std::size_t l = 0; l < cfg.depth; ++l) {
        for (std::size_t j = 0; j < w; ++j) {
          const auto& n = g.layers[l][j];
          int v = u(rng) < n.bias ? 1 : 0;
          for (std::size_t i = 0; i < w && v; ++i) {
            if (n.weights[i] > 0 && !prev[i]) v = 0;
            if (n.weights[i] < 0 && prev[i]) v = 0;
          }
          next[j] = v;
          const double df = fact[l + 1][j] - v, de = exact[l + 1][j] - v;
          sq_fact[l] += df * df;
          sq_exact[l] += de * de;
        }
        prev.swap(next);
      }
    }
    const double denom = static_cast<double>(cfg.points * w * cfg.trials);
    for (std::size_t l = 0; l < cfg.depth; ++l) {
      rows[l].loss_factorized += sq_fact[l] / denom;
      rows[l].loss_exact += sq_exact[l] / denom;
    }
  }
  return rows;
}

void write_gap_csv(std::ostream& out, const std::vector<gap_row>& rows, const gap_config& cfg) {
  out << "width,depth,trials,points,seed,loss_factorized,loss_exact,difference\n";
  out.precision(10);
  for (const auto& r : rows)
    out << r.width << ',' << r.depth << ',' << cfg.trials << ',' << cfg.points << ',' << cfg.seed << ','
        << r.loss_factorized << ',' << r.loss_exact << ',' << r.loss_factorized - r.loss_exact << '\n';
}

}  // namespace nln
