#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "nln/dataset.hpp"

namespace nln {

struct bool_literal {
  std::size_t var = 0;
  bool positive = true;
  bool operator==(const bool_literal&) const = default;
  auto operator<=>(const bool_literal&) const = default;
};

struct bool_rule {
  std::vector<bool_literal> body;  // sorted by variable
  std::size_t head = 0;
  bool operator==(const bool_rule&) const = default;
};

// Crisp program over n binary variables: each rule body -> next state of head.
struct ground_truth_program {
  std::vector<std::string> variables;
  std::vector<bool_rule> rules;

  std::size_t size() const { return variables.size(); }
  bool rule_fires(const bool_rule& r, std::uint64_t state) const;
  bool head_fires(std::size_t head, std::uint64_t state) const;
  void validate() const;
};

// Format: a `variables v1 v2 ...` line, then one `IF lit AND ... THEN v` per
// rule, literals being `v` or `NOT v` (`IF TRUE THEN v` for an empty body).
ground_truth_program parse_ground_truth(std::istream& in);
ground_truth_program load_ground_truth(const std::string& path);
void write_ground_truth(std::ostream& out, const ground_truth_program& p);

// All 2^n transitions; row i holds state bits (variable j = bit j of i).
dataset generate_transitions(const ground_truth_program& p);

struct recovery {
  double recovered_pct = 0.0;
  double excess_pct = 0.0;
  std::size_t recovered = 0, truth_rules = 0, excess = 0, extracted_rules = 0;
};

recovery recovery_score(const ground_truth_program& extracted, const ground_truth_program& truth);

constexpr std::size_t max_boolean_variables = 20;

}  // namespace nln
