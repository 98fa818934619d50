#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

namespace nln {

// Layered network of AND/OR nodes, each reading the whole previous layer
// (layer 0 is the input layer).
struct graph_node {
  bool is_or = false;
  std::vector<double> weights;  // one per node of the previous layer
  double bias = 1.0;            // a for AND, o for OR
};

struct layer_graph {
  std::size_t n_inputs = 0;
  std::vector<std::vector<graph_node>> layers;

  std::size_t width(std::size_t layer) const;  // layer 0 = inputs
  void validate() const;
};

constexpr std::size_t enumeration_guard = 20;

// Probability of every state in {0,1}^n; bit i of the index is node i.
struct joint_distribution {
  std::size_t n = 0;
  std::vector<double> p;

  double total() const;
  std::vector<double> marginals() const;
};

// Independent Bernoulli inputs; a 0/1 vector gives a degenerate joint.
joint_distribution independent_joint(const std::vector<double>& probs,
                                     std::size_t guard = enumeration_guard);

// P[node = 1 | previous layer state], the node formula on binary inputs.
double conditional_probability(const graph_node& node, std::uint64_t prev_state);

joint_distribution exact_layer_transition(const std::vector<graph_node>& layer,
                                          const joint_distribution& prev,
                                          std::size_t guard = enumeration_guard);

// Exact P[node = 1] for every layer (index 0 holds the inputs).
std::vector<std::vector<double>> exact_marginals(const layer_graph& g,
                                                 const std::vector<double>& input_probs,
                                                 std::size_t guard = enumeration_guard);

// The factorized forward pass, treating every node of a layer as independent.
std::vector<std::vector<double>> factorized_marginals(const layer_graph& g,
                                                      const std::vector<double>& input_probs);

// True when no two nodes of a layer share an ancestor (inputs included).
bool is_decomposable(const layer_graph& g);

struct gap_row {
  std::size_t width = 0, depth = 0;
  double loss_factorized = 0.0;  // mean over trials of the per-depth L2 loss
  double loss_exact = 0.0;
};

struct gap_config {
  std::size_t width = 2, depth = 10, trials = 30, points = 1000;
  std::uint64_t seed = 1;
};

// Random AND networks (weights 0 w.p. 1/2, +1 or -1 w.p. 1/4 each, a and the
// input Bernoulli parameters U(0,1)); nodes with no incoming or no outgoing
// weight get one +-1 weight. Each sampled point is scored against both
// formulations conditioned on its input row.
std::vector<gap_row> assumption_gap_experiment(const gap_config& cfg);
layer_graph random_and_network(std::size_t width, std::size_t depth, std::uint64_t seed,
                               std::vector<double>* input_probs = nullptr);
void write_gap_csv(std::ostream& out, const std::vector<gap_row>& rows, const gap_config& cfg);

}  // namespace nln
