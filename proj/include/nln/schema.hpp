#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace nln {

enum class feature_kind { binary, categorical, continuous };
enum class task_kind { multiclass, binary };

struct feature {
  std::string name;
  feature_kind kind = feature_kind::binary;
  std::vector<std::string> values;  // categorical only
  double lo = 0.0, hi = 0.0;        // continuous only
  bool has_range = false;
  bool allows_missing = false;
};

// A `class` column yields one output per value (multiclass). Each `target`
// column yields one binary output whose positive token is values[0].
struct target_column {
  std::string name;
  std::vector<std::string> values;
  bool multiclass = false;
};

enum class column_role { feature, target, ignore };

struct column {
  std::string name;
  column_role role = column_role::ignore;
  std::size_t index = 0;  // into features or targets
};

struct schema {
  std::vector<feature> features;
  std::vector<target_column> targets;
  std::vector<column> columns;  // declaration order

  task_kind task() const;
  std::size_t n_outputs() const;
  std::vector<std::string> output_names() const;
  std::size_t find_feature(const std::string& name) const;  // npos when absent
  void validate() const;
};

// Grammar, one declaration per line, '#' starts a comment:
//   name binary [missing]
//   name categorical v1 v2 ... [missing]
//   name continuous [min max] [missing]
//   name target [positive negative]
//   name class v1 v2 ...
//   name ignore
schema parse_schema(std::istream& in);
schema load_schema(const std::string& path);
void write_schema(std::ostream& out, const schema& s);

}  // namespace nln
