#include "nln/rules.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iomanip>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include "nln/encoding.hpp"
#include "nln/error.hpp"
#include "nln/nodes.hpp"

namespace nln {

namespace {

std::string fmt(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

std::string fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

double parse_number(const std::string& s) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw format_error("bad number '" + s + "'");
  }
  if (used != s.size()) throw format_error("bad number '" + s + "'");
  return v;
}

std::string value_name(const schema& s, std::size_t f, std::size_t v) {
  const auto& feat = s.features[f];
  if (feat.kind == feature_kind::binary) return v ? "1" : "0";
  return feat.values.at(v);
}

void check_discretized(const nln_model& m) {
  for (std::size_t i = 0; i < m.params.size(); ++i) {
    if (!is_logical_weight(m.kinds[i])) continue;
    const double w = m.params[i];
    const bool ok = w == 0.0 || w == 1.0 || (w == -1.0 && is_signed_weight(m.kinds[i]));
    if (!ok) throw not_discretized_error("model has a non-integer weight; discretize it first");
  }
}

}  // namespace

double logic_program::literal_value(const literal& l, const double* row) const {
  const double x = row[l.feature];
  if (is_missing(x)) return l.has_missing ? l.missing : 0.0;
  switch (l.kind) {
    case feature_kind::binary: return x;
    case feature_kind::categorical:
      return std::find(l.values.begin(), l.values.end(), static_cast<std::size_t>(x)) != l.values.end() ? 1.0
                                                                                                         : 0.0;
    case feature_kind::continuous: {
      double none = 1.0;
      for (const auto& c : l.intervals) {
        double in = 1.0;
        for (const auto& d : c.conditions) {
          const double s = sigmoid(d.sharpness * (x - d.boundary));
          in *= and_factor(d.above ? 1.0 : -1.0, s);
        }
        none *= 1.0 - in;
      }
      return 1.0 - none;
    }
  }
  return 0.0;
}

std::vector<double> logic_program::evaluate(const double* row) const {
  std::vector<double> keep(targets.size());
  for (std::size_t k = 0; k < targets.size(); ++k) keep[k] = 1.0 - target_bias[k];
  for (const auto& r : rules) {
    double c = r.bias;
    for (const auto& l : r.literals) c *= and_factor(l.positive ? 1.0 : -1.0, literal_value(l, row));
    keep[r.target] *= 1.0 - clamp_unit(c);
  }
  std::vector<double> out(targets.size());
  for (std::size_t k = 0; k < targets.size(); ++k) out[k] = clamp_unit(1.0 - keep[k]);
  return out;
}

logic_program extract_program(const nln_model& m, const dataset* d) {
  check_discretized(m);
  logic_program p;
  p.schema = m.schema;
  p.targets = m.schema.output_names();
  for (std::size_t k = 0; k < m.n_outputs; ++k) p.target_bias.push_back(m.out_bias(k));

  std::vector<double> coverage(m.n_rules, 0.0);
  if (d)
    for (std::size_t r = 0; r < m.n_rules; ++r)
      for (double c : rule_activation_unbiased(m, *d, r)) coverage[r] += c;

  for (std::size_t k = 0; k < m.n_outputs; ++k) {
    std::vector<rule> group;
    for (std::size_t r = 0; r < m.n_rules; ++r) {
      if (m.out_weight(k, r) == 0.0) continue;
      rule out;
      out.target = k;
      out.bias = m.and_bias(r);
      out.coverage = coverage[r];
      out.source = r;
      for (std::size_t s = 0; s < m.n_slots(); ++s) {
        const double A = m.and_weight(r, s);
        if (A == 0.0) continue;
        const slot& sl = m.slots[s];
        literal l;
        l.feature = sl.feature;
        l.kind = sl.kind;
        l.positive = A > 0.0;
        l.has_missing = sl.missing;
        if (sl.missing) l.missing = m.params[m.miss_index(r, s)];
        if (sl.kind == feature_kind::categorical) {
          for (std::size_t v = 0; v < sl.width; ++v)
            if (m.params[m.enc_index(r, s, v)] != 0.0) l.values.push_back(v);
          // NOT (f in V) is f in the complement of V; keep the shorter form.
          if (!l.positive && 2 * l.values.size() > sl.width) {
            std::vector<std::size_t> rest;
            for (std::size_t v = 0; v < sl.width; ++v)
              if (!std::binary_search(l.values.begin(), l.values.end(), v)) rest.push_back(v);
            l.values = std::move(rest);
            l.positive = true;
            if (l.has_missing) l.missing = 1.0 - l.missing;
          }
        } else if (sl.kind == feature_kind::continuous) {
          const auto& bl = m.rule_block(r, s);
          for (std::size_t j = 0; j < sl.width; ++j) {
            if (m.params[m.enc_index(r, s, j)] == 0.0) continue;
            interval_clause c;
            for (std::size_t q = 0; q < bl.n_dich; ++q) {
              const double w = m.params[bl.weights + j * bl.n_dich + q];
              if (w == 0.0) continue;
              c.conditions.push_back({w > 0.0, m.params[bl.boundary + q], m.params[bl.sharpness + q]});
            }
            l.intervals.push_back(std::move(c));
          }
        }
        out.literals.push_back(std::move(l));
      }
      group.push_back(std::move(out));
    }
    std::stable_sort(group.begin(), group.end(),
                     [](const rule& a, const rule& b) { return a.coverage > b.coverage; });
    for (auto& r : group) p.rules.push_back(std::move(r));
  }
  return p;
}

std::size_t literal_size(const literal& l) {
  switch (l.kind) {
    case feature_kind::binary: return 1;
    case feature_kind::categorical: return l.values.size();
    case feature_kind::continuous: {
      std::set<double> b;
      for (const auto& c : l.intervals)
        for (const auto& d : c.conditions) b.insert(d.boundary);
      return b.size();
    }
  }
  return 0;
}

std::size_t rule_size(const rule& r) {
  std::size_t n = 0;
  for (const auto& l : r.literals) n += literal_size(l);
  return n;
}

double mean_rule_size(const logic_program& p) {
  if (p.rules.empty()) return 0.0;
  double s = 0.0;
  for (const auto& r : p.rules) s += static_cast<double>(rule_size(r));
  return s / static_cast<double>(p.rules.size());
}

namespace {

std::string render_clause(const interval_clause& c, const std::string& name, int digits) {
  if (c.conditions.empty()) return name + " >= -inf";
  std::string out;
  for (std::size_t i = 0; i < c.conditions.size(); ++i) {
    if (i) out += " & ";
    const auto& d = c.conditions[i];
    out += name + (d.above ? " >= " : " < ") + fmt(d.boundary, digits);
  }
  return out;
}

std::string render_literal(const literal& l, const schema& s, const render_options& opt) {
  std::string out = l.positive ? "" : "NOT ";
  out += render_atom(l, s, opt.digits);
  if (l.has_missing) out += " [?=" + fixed(l.missing, opt.bias_decimals) + "]";
  return out;
}

}  // namespace

std::string render_atom(const literal& l, const schema& s, int digits) {
  const std::string& name = s.features.at(l.feature).name;
  switch (l.kind) {
    case feature_kind::binary: return name;
    case feature_kind::categorical: {
      if (l.values.size() == 1) return name + " = " + value_name(s, l.feature, l.values[0]);
      std::string out = name + " in {";
      for (std::size_t i = 0; i < l.values.size(); ++i) {
        if (i) out += ", ";
        out += value_name(s, l.feature, l.values[i]);
      }
      return out + "}";
    }
    case feature_kind::continuous: {
      if (l.intervals.empty()) return name + " in {}";
      if (l.intervals.size() == 1) {
        const auto& c = l.intervals[0];
        if (c.conditions.size() <= 1 || l.positive) return render_clause(c, name, digits);
        return "(" + render_clause(c, name, digits) + ")";
      }
      std::string out = "(";
      for (std::size_t i = 0; i < l.intervals.size(); ++i) {
        if (i) out += " OR ";
        out += render_clause(l.intervals[i], name, digits);
      }
      return out + ")";
    }
  }
  return name;
}

void render_text(std::ostream& out, const logic_program& p, const render_options& opt) {
  out << "# logic program: " << p.rules.size() << " rules\n";
  std::size_t next = 0;
  for (std::size_t k = 0; k < p.targets.size(); ++k) {
    for (; next < p.rules.size() && p.rules[next].target == k; ++next) {
      const rule& r = p.rules[next];
      out << "IF ";
      if (r.literals.empty()) out << "TRUE";
      std::vector<double> alphas;
      for (std::size_t i = 0; i < r.literals.size(); ++i) {
        if (i) out << " AND ";
        out << render_literal(r.literals[i], p.schema, opt);
        for (const auto& c : r.literals[i].intervals)
          for (const auto& d : c.conditions) alphas.push_back(d.sharpness);
      }
      out << " THEN " << p.targets[k] << " [a=" << fixed(r.bias, opt.bias_decimals) << "]";
      if (!alphas.empty()) {
        out << " [alpha=";
        for (std::size_t i = 0; i < alphas.size(); ++i) out << (i ? "," : "") << fmt(alphas[i], opt.digits);
        out << "]";
      }
      out << '\n';
    }
    out << "ELSE " << p.targets[k] << " [o=" << fixed(p.target_bias[k], opt.bias_decimals) << "]\n";
  }
  if (next != p.rules.size()) throw precondition_error("program rules are not grouped by target");
}

std::string render_text(const logic_program& p, const render_options& opt) {
  std::ostringstream os;
  render_text(os, p, opt);
  return os.str();
}

namespace {

std::vector<std::string> split_on(const std::string& s, const std::string& sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = s.find(sep, start);
    if (pos == std::string::npos) {
      out.push_back(s.substr(start));
      return out;
    }
    out.push_back(s.substr(start, pos - start));
    start = pos + sep.size();
  }
}

bool strip_prefix(std::string& s, const std::string& pre) {
  if (s.rfind(pre, 0) != 0) return false;
  s.erase(0, pre.size());
  return true;
}

// Trailing " [key=value]" annotation, removed from s.
bool take_annotation(std::string& s, const std::string& key, std::string& value) {
  const std::string open = " [" + key + "=";
  const std::size_t pos = s.rfind(open);
  if (pos == std::string::npos || s.back() != ']') return false;
  value = s.substr(pos + open.size(), s.size() - pos - open.size() - 1);
  s.erase(pos);
  return true;
}

std::size_t feature_of(const schema& s, const std::string& name) {
  const std::size_t f = s.find_feature(name);
  if (f == static_cast<std::size_t>(-1)) throw format_error("unknown feature '" + name + "'");
  return f;
}

std::size_t value_of(const schema& s, std::size_t f, const std::string& v) {
  const auto& feat = s.features[f];
  if (feat.kind == feature_kind::binary) {
    if (v == "0") return 0;
    if (v == "1") return 1;
  } else {
    auto it = std::find(feat.values.begin(), feat.values.end(), v);
    if (it != feat.values.end()) return static_cast<std::size_t>(it - feat.values.begin());
  }
  throw format_error("unknown value '" + v + "' of '" + feat.name + "'");
}

dichotomy_condition parse_condition(const std::string& text, std::string& name) {
  for (const char* op : {" >= ", " < "}) {
    const std::size_t pos = text.find(op);
    if (pos == std::string::npos) continue;
    name = text.substr(0, pos);
    dichotomy_condition d;
    d.above = std::string(op) == " >= ";
    d.boundary = parse_number(text.substr(pos + std::string(op).size()));
    return d;
  }
  throw format_error("bad interval condition '" + text + "'");
}

literal parse_literal(std::string text, const schema& s) {
  literal l;
  std::string v;
  if (take_annotation(text, "?", v)) {
    l.has_missing = true;
    l.missing = parse_number(v);
  }
  if (strip_prefix(text, "NOT ")) l.positive = false;

  if (const std::size_t pos = text.find(" in {"); pos != std::string::npos) {
    l.feature = feature_of(s, text.substr(0, pos));
    const auto& feat = s.features[l.feature];
    if (text.back() != '}') throw format_error("unclosed value set in '" + text + "'");
    const std::string inner = text.substr(pos + 5, text.size() - pos - 6);
    l.kind = feat.kind == feature_kind::continuous ? feature_kind::continuous : feature_kind::categorical;
    if (!inner.empty()) {
      if (l.kind == feature_kind::continuous) throw format_error("continuous value set must be empty");
      for (const auto& item : split_on(inner, ", ")) l.values.push_back(value_of(s, l.feature, item));
    }
    return l;
  }
  if (text.find(" >= ") != std::string::npos || text.find(" < ") != std::string::npos) {
    if (text.front() == '(' && text.back() == ')') text = text.substr(1, text.size() - 2);
    l.kind = feature_kind::continuous;
    std::string name;
    for (const auto& clause : split_on(text, " OR ")) {
      interval_clause c;
      for (const auto& cond : split_on(clause, " & ")) {
        auto d = parse_condition(cond, name);
        if (!(d.above && d.boundary == -HUGE_VAL)) c.conditions.push_back(d);
      }
      l.intervals.push_back(std::move(c));
    }
    l.feature = feature_of(s, name);
    return l;
  }
  if (const std::size_t pos = text.find(" = "); pos != std::string::npos) {
    l.feature = feature_of(s, text.substr(0, pos));
    l.kind = feature_kind::categorical;
    l.values.push_back(value_of(s, l.feature, text.substr(pos + 3)));
    return l;
  }
  l.feature = feature_of(s, text);
  if (s.features[l.feature].kind != feature_kind::binary)
    throw format_error("feature '" + text + "' is not binary");
  l.kind = feature_kind::binary;
  return l;
}

std::size_t target_of(const std::vector<std::string>& targets, const std::string& name) {
  auto it = std::find(targets.begin(), targets.end(), name);
  if (it == targets.end()) throw format_error("unknown target '" + name + "'");
  return static_cast<std::size_t>(it - targets.begin());
}

}  // namespace

logic_program parse_text(const std::string& text, const schema& s) {
  logic_program p;
  p.schema = s;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  std::vector<bool> have_bias;
  while (std::getline(in, line)) {
    ++lineno;
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    if (p.targets.empty()) {
      p.targets = s.output_names();
      p.target_bias.assign(p.targets.size(), 0.0);
      have_bias.assign(p.targets.size(), false);
    }
    try {
      std::string v;
      if (strip_prefix(line, "ELSE ")) {
        if (!take_annotation(line, "o", v)) throw format_error("missing [o=...]");
        const std::size_t k = target_of(p.targets, line);
        p.target_bias[k] = parse_number(v);
        have_bias[k] = true;
        continue;
      }
      if (!strip_prefix(line, "IF ")) throw format_error("expected IF or ELSE");
      std::vector<double> alphas;
      if (take_annotation(line, "alpha", v))
        for (const auto& a : split_on(v, ",")) alphas.push_back(parse_number(a));
      rule r;
      if (!take_annotation(line, "a", v)) throw format_error("missing [a=...]");
      r.bias = parse_number(v);
      const std::size_t then = line.rfind(" THEN ");
      if (then == std::string::npos) throw format_error("missing THEN");
      r.target = target_of(p.targets, line.substr(then + 6));
      const std::string body = line.substr(0, then);
      if (body != "TRUE")
        for (const auto& lit : split_on(body, " AND ")) r.literals.push_back(parse_literal(lit, s));
      std::size_t next = 0;
      for (auto& l : r.literals)
        for (auto& c : l.intervals)
          for (auto& d : c.conditions) {
            if (next >= alphas.size()) throw format_error("too few sharpness values");
            d.sharpness = alphas[next++];
          }
      if (next != alphas.size()) throw format_error("too many sharpness values");
      r.source = p.rules.size();
      p.rules.push_back(std::move(r));
    } catch (const format_error& e) {
      throw format_error("rule text line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  if (p.targets.empty()) {
    p.targets = s.output_names();
    p.target_bias.assign(p.targets.size(), 0.0);
  }
  std::stable_sort(p.rules.begin(), p.rules.end(),
                   [](const rule& a, const rule& b) { return a.target < b.target; });
  return p;
}

namespace {

std::string dot_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out;
}

}  // namespace

void render_graph(std::ostream& out, const logic_program& p, const render_options& opt) {
  out << "digraph program {\n  rankdir=LR;\n";
  for (std::size_t k = 0; k < p.targets.size(); ++k)
    out << "  t" << k << " [label=\"" << dot_escape(p.targets[k]) << "\\no=" << fixed(p.target_bias[k], opt.bias_decimals)
        << "\", shape=doubleoctagon];\n";
  std::map<std::string, std::size_t> inputs;
  for (std::size_t i = 0; i < p.rules.size(); ++i) {
    const rule& r = p.rules[i];
    out << "  r" << i << " [label=\"AND\\na=" << fixed(r.bias, opt.bias_decimals) << "\", shape=box];\n";
    for (const auto& l : r.literals) {
      std::string label = render_atom(l, p.schema, opt.digits);
      if (l.has_missing) label += " [?=" + fixed(l.missing, opt.bias_decimals) + "]";
      auto [it, fresh] = inputs.emplace(label, inputs.size());
      if (fresh) out << "  i" << it->second << " [label=\"" << dot_escape(label) << "\", shape=ellipse];\n";
      out << "  i" << it->second << " -> r" << i;
      if (!l.positive) out << " [style=dashed, color=red, arrowhead=odot]";
      out << ";\n";
    }
    out << "  r" << i << " -> t" << r.target << ";\n";
  }
  out << "}\n";
}

coverage_table coverage_breakdown(const nln_model& m, const dataset& d) {
  coverage_table t;
  const bool multiclass = m.task() == task_kind::multiclass;
  const auto names = m.schema.output_names();
  const std::size_t K = m.n_outputs;
  if (multiclass) {
    for (const auto& v : m.schema.targets.at(0).values) t.columns.push_back(v);
  } else {
    t.columns = {"positive", "negative"};
  }
  std::vector<std::size_t> class_of(d.n_rows, 0);
  std::vector<double> per_class(K, 0.0);
  for (std::size_t row = 0; row < d.n_rows; ++row)
    for (std::size_t k = 0; k < K; ++k)
      if (d.target(row)[k] > 0.5) {
        class_of[row] = k;
        per_class[k] += 1.0;
      }
  for (std::size_t r = 0; r < m.n_rules; ++r) {
    coverage_row cr;
    cr.rule = r;
    std::size_t target = K;
    for (std::size_t k = 0; k < K && target == K; ++k)
      if (m.out_weight(k, r) != 0.0) target = k;
    cr.mass.assign(t.columns.size(), 0.0);
    if (multiclass) {
      cr.class_rows = per_class;
    } else if (target < K) {
      cr.class_rows = {per_class[target], static_cast<double>(d.n_rows) - per_class[target]};
    } else {
      cr.class_rows.assign(2, 0.0);
    }
    if (target < K) {
      cr.target = names[target];
      const auto c = rule_activation_unbiased(m, d, r);
      for (std::size_t row = 0; row < d.n_rows; ++row) {
        const std::size_t col = multiclass ? class_of[row] : (d.target(row)[target] > 0.5 ? 0 : 1);
        cr.mass[col] += c[row];
        cr.total += c[row];
      }
    }
    t.rows.push_back(std::move(cr));
  }
  return t;
}

void write_coverage_text(std::ostream& out, const coverage_table& t) {
  out << std::left << std::setw(6) << "rule" << std::setw(24) << "target";
  for (const auto& c : t.columns) out << std::setw(22) << c;
  out << "total\n";
  for (const auto& r : t.rows) {
    out << std::setw(6) << r.rule << std::setw(24) << (r.target.empty() ? "-" : r.target);
    for (std::size_t i = 0; i < t.columns.size(); ++i) {
      std::ostringstream cell;
      cell << std::fixed << std::setprecision(2) << r.mass[i];
      if (r.class_rows[i] > 0)
        cell << " (" << std::setprecision(1) << 100.0 * r.mass[i] / r.class_rows[i] << "%)";
      out << std::setw(22) << cell.str();
    }
    out << std::fixed << std::setprecision(2) << r.total << '\n';
    out.unsetf(std::ios::fixed);
  }
}

void write_coverage_csv(std::ostream& out, const coverage_table& t) {
  out << "rule,target";
  for (const auto& c : t.columns) out << ',' << c;
  out << ",total\n";
  out << std::setprecision(17);
  for (const auto& r : t.rows) {
    out << r.rule << ',' << r.target;
    for (double v : r.mass) out << ',' << v;
    out << ',' << r.total << '\n';
  }
}

}  // namespace nln
