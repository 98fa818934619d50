#include "nln/boolnet.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "nln/error.hpp"

namespace nln {

bool ground_truth_program::rule_fires(const bool_rule& r, std::uint64_t state) const {
  for (const auto& l : r.body)
    if ((((state >> l.var) & 1U) != 0) != l.positive) return false;
  return true;
}

bool ground_truth_program::head_fires(std::size_t head, std::uint64_t state) const {
  for (const auto& r : rules)
    if (r.head == head && rule_fires(r, state)) return true;
  return false;
}

void ground_truth_program::validate() const {
  const std::size_t n = variables.size();
  if (n > max_boolean_variables) throw capacity_error("too many Boolean variables");
  for (std::size_t i = 0; i < rules.size(); ++i) {
    const auto& r = rules[i];
    if (r.head >= n) throw schema_error("rule head out of range");
    std::set<std::size_t> seen;
    for (const auto& l : r.body) {
      if (l.var >= n) throw schema_error("literal variable out of range");
      if (!seen.insert(l.var).second) throw schema_error("variable repeated in a rule body");
    }
    for (std::size_t j = 0; j < i; ++j)
      if (rules[j] == r) throw schema_error("duplicate rule");
  }
}

namespace {

std::size_t var_index(const std::vector<std::string>& vars, const std::string& name, std::size_t line) {
  auto it = std::find(vars.begin(), vars.end(), name);
  if (it == vars.end())
    throw schema_error("line " + std::to_string(line) + ": unknown variable '" + name + "'");
  return static_cast<std::size_t>(it - vars.begin());
}

}  // namespace

ground_truth_program parse_ground_truth(std::istream& in) {
  ground_truth_program p;
  std::string raw;
  std::size_t line = 0;
  bool have_vars = false;
  while (std::getline(in, raw)) {
    ++line;
    if (auto h = raw.find('#'); h != std::string::npos) raw.erase(h);
    std::istringstream ls(raw);
    std::vector<std::string> tok;
    for (std::string t; ls >> t;) tok.push_back(t);
    if (tok.empty()) continue;
    if (tok[0] == "variables") {
      p.variables.assign(tok.begin() + 1, tok.end());
      have_vars = true;
      continue;
    }
    if (!have_vars) throw schema_error("ground truth needs a 'variables' line first");
    if (tok[0] != "IF") throw schema_error("line " + std::to_string(line) + ": expected IF");
    auto then = std::find(tok.begin(), tok.end(), "THEN");
    if (then == tok.end() || then + 2 != tok.end())
      throw schema_error("line " + std::to_string(line) + ": expected 'THEN var' at the end");
    bool_rule r;
    r.head = var_index(p.variables, *(then + 1), line);
    std::vector<std::string> body(tok.begin() + 1, then);
    if (!(body.size() == 1 && body[0] == "TRUE")) {
      bool neg = false, expect_lit = true;
      for (const auto& t : body) {
        if (expect_lit && t == "NOT") {
          neg = !neg;
        } else if (expect_lit) {
          r.body.push_back({var_index(p.variables, t, line), !neg});
          neg = false;
          expect_lit = false;
        } else if (t == "AND") {
          expect_lit = true;
        } else {
          throw schema_error("line " + std::to_string(line) + ": expected AND, got '" + t + "'");
        }
      }
      if (expect_lit) throw schema_error("line " + std::to_string(line) + ": dangling literal");
    }
    std::sort(r.body.begin(), r.body.end());
    p.rules.push_back(r);
  }
  p.validate();
  return p;
}

ground_truth_program load_ground_truth(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw data_error("cannot open program file '" + path + "'");
  return parse_ground_truth(in);
}

void write_ground_truth(std::ostream& out, const ground_truth_program& p) {
  out << "variables";
  for (const auto& v : p.variables) out << ' ' << v;
  out << '\n';
  for (const auto& r : p.rules) {
    out << "IF ";
    if (r.body.empty()) out << "TRUE";
    for (std::size_t i = 0; i < r.body.size(); ++i) {
      if (i) out << " AND ";
      out << (r.body[i].positive ? "" : "NOT ") << p.variables[r.body[i].var];
    }
    out << " THEN " << p.variables[r.head] << '\n';
  }
}

dataset generate_transitions(const ground_truth_program& p) {
  p.validate();
  const std::size_t n = p.size();
  dataset d;
  for (const auto& v : p.variables) {
    feature f;
    f.name = v;
    f.kind = feature_kind::binary;
    d.schema.columns.push_back({v, column_role::feature, d.schema.features.size()});
    d.schema.features.push_back(f);
  }
  for (const auto& v : p.variables) {
    target_column t;
    t.name = v + "_next";
    t.values = {"1", "0"};
    d.schema.columns.push_back({t.name, column_role::target, d.schema.targets.size()});
    d.schema.targets.push_back(t);
  }
  const std::uint64_t rows = std::uint64_t{1} << n;
  d.n_rows = rows;
  d.x.reserve(rows * n);
  d.y.reserve(rows * n);
  for (std::uint64_t s = 0; s < rows; ++s) {
    for (std::size_t j = 0; j < n; ++j) d.x.push_back(static_cast<double>((s >> j) & 1U));
    for (std::size_t j = 0; j < n; ++j) d.y.push_back(p.head_fires(j, s) ? 1.0 : 0.0);
  }
  return d;
}

namespace {

// Whenever `r` fires, some rule of `p` with the same head fires.
bool subsumed(const bool_rule& r, const ground_truth_program& p, std::size_t n) {
  std::uint64_t fixed_mask = 0, fixed_val = 0;
  for (const auto& l : r.body) {
    fixed_mask |= std::uint64_t{1} << l.var;
    if (l.positive) fixed_val |= std::uint64_t{1} << l.var;
  }
  const std::uint64_t total = std::uint64_t{1} << n;
  for (std::uint64_t s = 0; s < total; ++s) {
    if ((s & fixed_mask) != fixed_val) continue;
    if (!p.head_fires(r.head, s)) return false;
  }
  return true;
}

}  // namespace

recovery recovery_score(const ground_truth_program& extracted, const ground_truth_program& truth) {
  if (extracted.size() != truth.size()) throw schema_error("programs use different variable sets");
  const std::size_t n = truth.size();
  if (n > max_boolean_variables) throw capacity_error("too many Boolean variables");
  recovery out;
  out.truth_rules = truth.rules.size();
  out.extracted_rules = extracted.rules.size();
  for (const auto& t : truth.rules) {
    const bool same = std::find(extracted.rules.begin(), extracted.rules.end(), t) != extracted.rules.end();
    if (same || subsumed(t, extracted, n)) ++out.recovered;
  }
  for (const auto& e : extracted.rules) {
    const bool same = std::find(truth.rules.begin(), truth.rules.end(), e) != truth.rules.end();
    if (!same && !subsumed(e, truth, n)) ++out.excess;
  }
  if (out.truth_rules > 0) {
    out.recovered_pct = 100.0 * static_cast<double>(out.recovered) / static_cast<double>(out.truth_rules);
    out.excess_pct = 100.0 * static_cast<double>(out.excess) / static_cast<double>(out.truth_rules);
  } else {
    out.recovered_pct = 100.0;
    out.excess_pct = out.extracted_rules > 0 ? 100.0 : 0.0;
  }
  return out;
}

}  // namespace nln
