#include "nln/schema.hpp"

#include <fstream>
#include <iomanip>
#include <limits>
#include <set>
#include <sstream>

#include "nln/error.hpp"

namespace nln {

task_kind schema::task() const {
  for (const auto& t : targets)
    if (t.multiclass) return task_kind::multiclass;
  return task_kind::binary;
}

std::size_t schema::n_outputs() const {
  std::size_t n = 0;
  for (const auto& t : targets) n += t.multiclass ? t.values.size() : 1;
  return n;
}

std::vector<std::string> schema::output_names() const {
  std::vector<std::string> out;
  for (const auto& t : targets) {
    if (t.multiclass) {
      for (const auto& v : t.values) out.push_back(t.name + " = " + v);
    } else if (t.values.size() == 2 && t.values[0] == "1" && t.values[1] == "0") {
      out.push_back(t.name);
    } else {
      out.push_back(t.name + " = " + t.values[0]);
    }
  }
  return out;
}

std::size_t schema::find_feature(const std::string& name) const {
  for (std::size_t i = 0; i < features.size(); ++i)
    if (features[i].name == name) return i;
  return std::numeric_limits<std::size_t>::max();
}

void schema::validate() const {
  std::set<std::string> names;
  for (const auto& c : columns)
    if (!names.insert(c.name).second) throw schema_error("duplicate column '" + c.name + "'");
  for (const auto& f : features) {
    if (f.kind == feature_kind::categorical) {
      if (f.values.empty()) throw schema_error("categorical '" + f.name + "' has no values");
      std::set<std::string> vs(f.values.begin(), f.values.end());
      if (vs.size() != f.values.size())
        throw schema_error("categorical '" + f.name + "' has duplicate values");
    }
    if (f.kind == feature_kind::continuous && f.has_range && !(f.lo < f.hi))
      throw schema_error("continuous '" + f.name + "' needs min < max");
  }
  std::size_t multiclass = 0;
  for (const auto& t : targets) {
    if (t.multiclass) ++multiclass;
    if (t.multiclass && t.values.size() < 2)
      throw schema_error("class '" + t.name + "' needs at least two values");
    if (!t.multiclass && t.values.size() != 2)
      throw schema_error("target '" + t.name + "' needs a positive and a negative token");
  }
  if (multiclass > 1 || (multiclass == 1 && targets.size() > 1))
    throw schema_error("a class column cannot be combined with other targets");
}

namespace {

double parse_number(const std::string& tok, std::size_t line) {
  try {
    std::size_t used = 0;
    double v = std::stod(tok, &used);
    if (used == tok.size()) return v;
  } catch (const std::exception&) {
  }
  throw schema_error("line " + std::to_string(line) + ": '" + tok + "' is not a number");
}

}  // namespace

schema parse_schema(std::istream& in) {
  schema s;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    if (auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
    std::istringstream ls(raw);
    std::vector<std::string> tok;
    for (std::string t; ls >> t;) tok.push_back(t);
    if (tok.empty()) continue;
    if (tok.size() < 2) throw schema_error("line " + std::to_string(line_no) + ": missing kind");

    const std::string& name = tok[0];
    const std::string& kind = tok[1];
    std::vector<std::string> rest(tok.begin() + 2, tok.end());
    bool missing = false;
    if (!rest.empty() && rest.back() == "missing" && kind != "class" && kind != "target") {
      missing = true;
      rest.pop_back();
    }

    column col{name, column_role::feature, s.features.size()};
    feature f;
    f.name = name;
    f.allows_missing = missing;
    if (kind == "binary") {
      if (!rest.empty()) throw schema_error("line " + std::to_string(line_no) + ": binary takes no values");
      f.kind = feature_kind::binary;
      s.features.push_back(f);
    } else if (kind == "categorical") {
      f.kind = feature_kind::categorical;
      f.values = rest;
      s.features.push_back(f);
    } else if (kind == "continuous") {
      f.kind = feature_kind::continuous;
      if (rest.size() == 2) {
        f.lo = parse_number(rest[0], line_no);
        f.hi = parse_number(rest[1], line_no);
        f.has_range = true;
      } else if (!rest.empty()) {
        throw schema_error("line " + std::to_string(line_no) + ": continuous takes 'min max'");
      }
      s.features.push_back(f);
    } else if (kind == "target" || kind == "class") {
      target_column t;
      t.name = name;
      t.multiclass = kind == "class";
      t.values = rest;
      if (!t.multiclass && t.values.empty()) t.values = {"1", "0"};
      col.role = column_role::target;
      col.index = s.targets.size();
      s.targets.push_back(t);
    } else if (kind == "ignore") {
      col.role = column_role::ignore;
      col.index = 0;
    } else {
      throw schema_error("line " + std::to_string(line_no) + ": unknown kind '" + kind + "'");
    }
    s.columns.push_back(col);
  }
  s.validate();
  return s;
}

schema load_schema(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw schema_error("cannot open schema file '" + path + "'");
  return parse_schema(in);
}

void write_schema(std::ostream& out, const schema& s) {
  out << std::setprecision(17);
  for (const auto& c : s.columns) {
    out << c.name;
    if (c.role == column_role::ignore) {
      out << " ignore\n";
      continue;
    }
    if (c.role == column_role::target) {
      const auto& t = s.targets[c.index];
      out << (t.multiclass ? " class" : " target");
      for (const auto& v : t.values) out << ' ' << v;
      out << '\n';
      continue;
    }
    const auto& f = s.features[c.index];
    switch (f.kind) {
      case feature_kind::binary: out << " binary"; break;
      case feature_kind::categorical:
        out << " categorical";
        for (const auto& v : f.values) out << ' ' << v;
        break;
      case feature_kind::continuous:
        out << " continuous";
        if (f.has_range) out << ' ' << f.lo << ' ' << f.hi;
        break;
    }
    if (f.allows_missing) out << " missing";
    out << '\n';
  }
}

}  // namespace nln
