#include "nln/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include "nln/error.hpp"

namespace nln {

dataset dataset::subset(const std::vector<std::size_t>& rows) const {
  dataset out;
  out.schema = schema;
  out.n_rows = rows.size();
  const std::size_t nf = n_features(), no = n_outputs();
  out.x.reserve(rows.size() * nf);
  out.y.reserve(rows.size() * no);
  for (std::size_t r : rows) {
    if (r >= n_rows) throw dimension_error("subset row out of range");
    out.x.insert(out.x.end(), row(r), row(r) + nf);
    out.y.insert(out.y.end(), target(r), target(r) + no);
  }
  return out;
}

void dataset::append(const dataset& other) {
  if (other.n_features() != n_features() || other.n_outputs() != n_outputs())
    throw schema_error("cannot append datasets with different schemas");
  x.insert(x.end(), other.x.begin(), other.x.end());
  y.insert(y.end(), other.y.begin(), other.y.end());
  n_rows += other.n_rows;
}

std::vector<int> strata(const dataset& d) {
  std::vector<int> s(d.n_rows, -1);
  const std::size_t no = d.n_outputs();
  if (d.schema.task() == task_kind::multiclass) {
    for (std::size_t r = 0; r < d.n_rows; ++r) {
      const double* t = d.target(r);
      s[r] = static_cast<int>(std::max_element(t, t + no) - t);
    }
  } else if (no == 1) {
    for (std::size_t r = 0; r < d.n_rows; ++r) s[r] = d.target(r)[0] > 0.5 ? 1 : 0;
  }
  return s;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char ch = line[i];
    if (quoted) {
      if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (ch == '"') {
        quoted = false;
      } else {
        cur += ch;
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur += ch;
    }
  }
  out.push_back(cur);
  for (auto& f : out) {
    auto b = f.find_first_not_of(" \t");
    auto e = f.find_last_not_of(" \t");
    f = b == std::string::npos ? std::string() : f.substr(b, e - b + 1);
  }
  return out;
}

namespace {

[[noreturn]] void bad(std::size_t line, const std::string& what) {
  throw data_error("row " + std::to_string(line) + ": " + what);
}

double parse_feature(const feature& f, const std::string& tok, bool missing, std::size_t line) {
  if (missing) {
    if (!f.allows_missing) bad(line, "missing value in '" + f.name + "' which forbids it");
    return std::numeric_limits<double>::quiet_NaN();
  }
  switch (f.kind) {
    case feature_kind::binary:
      if (tok == "1" || tok == "true" || tok == "True") return 1.0;
      if (tok == "0" || tok == "false" || tok == "False") return 0.0;
      bad(line, "'" + tok + "' is not binary for '" + f.name + "'");
    case feature_kind::categorical: {
      auto it = std::find(f.values.begin(), f.values.end(), tok);
      if (it == f.values.end()) bad(line, "undeclared value '" + tok + "' for '" + f.name + "'");
      return static_cast<double>(it - f.values.begin());
    }
    case feature_kind::continuous: {
      try {
        std::size_t used = 0;
        double v = std::stod(tok, &used);
        if (used == tok.size() && std::isfinite(v)) return v;
      } catch (const std::exception&) {
      }
      bad(line, "'" + tok + "' is not a number for '" + f.name + "'");
    }
  }
  return 0.0;
}

}  // namespace

dataset parse_csv(const std::string& text, const schema& s, const std::string& missing_token) {
  dataset d;
  d.schema = s;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  std::vector<int> col_of;  // csv column -> schema column, -1 unknown
  bool header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto fields = split_csv_line(line);
    if (!header) {
      header = true;
      std::map<std::string, int> pos;
      for (std::size_t i = 0; i < s.columns.size(); ++i) pos[s.columns[i].name] = static_cast<int>(i);
      std::vector<bool> seen(s.columns.size(), false);
      for (const auto& h : fields) {
        auto it = pos.find(h);
        if (it == pos.end()) throw data_error("header column '" + h + "' is not in the schema");
        if (seen[it->second]) throw data_error("header column '" + h + "' repeated");
        seen[it->second] = true;
        col_of.push_back(it->second);
      }
      for (std::size_t i = 0; i < seen.size(); ++i)
        if (!seen[i]) throw data_error("schema column '" + s.columns[i].name + "' missing from header");
      continue;
    }
    if (fields.size() != col_of.size())
      bad(line_no, "expected " + std::to_string(col_of.size()) + " fields, got " +
                       std::to_string(fields.size()));
    std::vector<double> xs(s.features.size());
    std::vector<double> ys(s.n_outputs(), 0.0);
    for (std::size_t i = 0; i < fields.size(); ++i) {
      const column& c = s.columns[col_of[i]];
      const std::string& tok = fields[i];
      const bool missing = tok.empty() || tok == missing_token;
      if (c.role == column_role::feature) {
        xs[c.index] = parse_feature(s.features[c.index], tok, missing, line_no);
      } else if (c.role == column_role::target) {
        const auto& t = s.targets[c.index];
        if (missing) bad(line_no, "missing target '" + t.name + "'");
        std::size_t base = 0;
        for (std::size_t j = 0; j < c.index; ++j)
          base += s.targets[j].multiclass ? s.targets[j].values.size() : 1;
        auto it = std::find(t.values.begin(), t.values.end(), tok);
        if (it == t.values.end()) bad(line_no, "undeclared target value '" + tok + "'");
        const std::size_t k = static_cast<std::size_t>(it - t.values.begin());
        if (t.multiclass)
          ys[base + k] = 1.0;
        else
          ys[base] = k == 0 ? 1.0 : 0.0;
      }
    }
    d.x.insert(d.x.end(), xs.begin(), xs.end());
    d.y.insert(d.y.end(), ys.begin(), ys.end());
    ++d.n_rows;
  }
  return d;
}

dataset load_csv(const std::string& path, const schema& s, const std::string& missing_token) {
  std::ifstream in(path);
  if (!in) throw data_error("cannot open data file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_csv(buf.str(), s, missing_token);
}

dataset load_csv(const std::string& path, const std::string& schema_path,
                 const std::string& missing_token) {
  return load_csv(path, load_schema(schema_path), missing_token);
}

schema with_data_ranges(const schema& s, const dataset& d) {
  schema out = s;
  for (std::size_t f = 0; f < out.features.size(); ++f) {
    auto& feat = out.features[f];
    if (feat.kind != feature_kind::continuous || feat.has_range) continue;
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (std::size_t r = 0; r < d.n_rows; ++r) {
      double v = d.value(r, f);
      if (is_missing(v)) continue;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    if (!(lo <= hi)) {
      lo = 0.0;
      hi = 1.0;
    } else if (lo == hi) {
      lo -= 0.5;
      hi += 0.5;
    }
    feat.lo = lo;
    feat.hi = hi;
    feat.has_range = true;
  }
  return out;
}

}  // namespace nln
