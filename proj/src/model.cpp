#include "nln/model.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <random>
#include <sstream>

#include "nln/engine.hpp"
#include "nln/error.hpp"

namespace nln {

bool is_logical_weight(param_kind k) {
  switch (k) {
    case param_kind::and_weight:
    case param_kind::class_weight:
    case param_kind::interval_choice:
    case param_kind::interval_weight:
    case param_kind::out_weight: return true;
    default: return false;
  }
}

bool is_signed_weight(param_kind k) {
  return k == param_kind::and_weight || k == param_kind::interval_weight;
}

bool is_continuous_param(param_kind k) {
  switch (k) {
    case param_kind::and_bias:
    case param_kind::out_bias:
    case param_kind::boundary:
    case param_kind::sharpness:
    case param_kind::missing_weight: return true;
    default: return false;
  }
}

namespace {

void wire(nln_model& m, std::size_t n_rules, std::size_t n_outputs, std::size_t n_sets = 1) {
  if (m.schema.features.empty()) throw schema_error("schema has no features");
  if (n_rules == 0) throw precondition_error("need at least one rule");
  if (n_outputs == 0) throw precondition_error("need at least one target");
  m.n_rules = n_rules;
  m.n_outputs = n_outputs;
  m.n_sets = n_sets;
  m.rule_set.assign(n_rules, 0);
  m.slots.clear();
  m.blocks.clear();
  const std::size_t nd = m.options.n_dichotomies;
  if (nd == 0) throw precondition_error("need at least one dichotomy");

  std::size_t off = 0;
  for (std::size_t f = 0; f < m.schema.features.size(); ++f) {
    const auto& feat = m.schema.features[f];
    slot s;
    s.feature = f;
    s.missing = feat.allows_missing;
    if (feat.kind == feature_kind::binary && !feat.allows_missing) {
      s.kind = feature_kind::binary;
    } else if (feat.kind == feature_kind::binary) {
      s.kind = feature_kind::categorical;
      s.width = 2;
      s.promoted = true;
    } else if (feat.kind == feature_kind::categorical) {
      s.kind = feature_kind::categorical;
      s.width = feat.values.size();
    } else {
      if (!feat.has_range) throw schema_error("continuous '" + feat.name + "' has no range");
      s.kind = feature_kind::continuous;
      s.width = nd + 1;
      s.block = m.blocks.size();
      block_layout bl;
      bl.feature = f;
      bl.n_dich = nd;
      bl.n_int = nd + 1;
      bl.boundary = off;
      bl.sharpness = off + nd;
      bl.weights = off + 2 * nd;
      off += 2 * nd + bl.n_int * nd;
      m.blocks.push_back(bl);
    }
    m.slots.push_back(s);
  }
  const std::size_t per_set = off, n_con = m.blocks.size();
  for (std::size_t set = 1; set < n_sets; ++set)
    for (std::size_t b = 0; b < n_con; ++b) {
      block_layout bl = m.blocks[b];
      bl.boundary += set * per_set;
      bl.sharpness += set * per_set;
      bl.weights += set * per_set;
      m.blocks.push_back(bl);
    }
  off = per_set * n_sets;

  const std::size_t S = m.slots.size();
  std::size_t rel = S + 1;
  for (auto& s : m.slots) {
    if (s.kind == feature_kind::binary) continue;
    s.enc_offset = rel;
    rel += s.width;
  }
  for (auto& s : m.slots) {
    if (!s.missing) continue;
    s.miss_offset = rel;
    rel += 1;
  }
  m.rule_base = off;
  m.rule_stride = rel;
  m.out_base = m.rule_base + n_rules * m.rule_stride;
  m.out_bias_base = m.out_base + n_outputs * n_rules;
  const std::size_t total = m.out_bias_base + n_outputs;

  m.params.assign(total, 0.0);
  m.kinds.assign(total, param_kind::and_weight);
  for (const auto& bl : m.blocks) {
    for (std::size_t k = 0; k < bl.n_dich; ++k) {
      m.kinds[bl.boundary + k] = param_kind::boundary;
      m.kinds[bl.sharpness + k] = param_kind::sharpness;
    }
    for (std::size_t i = 0; i < bl.n_int * bl.n_dich; ++i)
      m.kinds[bl.weights + i] = param_kind::interval_weight;
  }
  for (std::size_t r = 0; r < n_rules; ++r) {
    const std::size_t base = m.rule_offset(r);
    m.kinds[base + S] = param_kind::and_bias;
    for (const auto& s : m.slots) {
      if (s.kind != feature_kind::binary)
        for (std::size_t v = 0; v < s.width; ++v)
          m.kinds[base + s.enc_offset + v] = s.kind == feature_kind::categorical
                                                 ? param_kind::class_weight
                                                 : param_kind::interval_choice;
      if (s.missing) m.kinds[base + s.miss_offset] = param_kind::missing_weight;
    }
  }
  for (std::size_t i = m.out_base; i < m.out_bias_base; ++i) m.kinds[i] = param_kind::out_weight;
  for (std::size_t i = m.out_bias_base; i < total; ++i) m.kinds[i] = param_kind::out_bias;
}

void init_rule(nln_model& m, std::size_t r, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> sym(-1.0, 1.0), pos(0.0, 1.0);
  const std::size_t base = m.rule_offset(r);
  for (std::size_t i = base; i < base + m.rule_stride; ++i) {
    switch (m.kinds[i]) {
      case param_kind::and_weight: m.params[i] = sym(rng); break;
      case param_kind::and_bias: m.params[i] = 1.0; break;
      default: m.params[i] = pos(rng); break;
    }
  }
}

}  // namespace

continuous_encoder nln_model::encoder(std::size_t b) const {
  const auto& bl = blocks.at(b);
  continuous_encoder e;
  for (std::size_t k = 0; k < bl.n_dich; ++k)
    e.dichotomies.push_back({params[bl.boundary + k], params[bl.sharpness + k]});
  e.n_intervals = bl.n_int;
  e.interval_weights.assign(params.begin() + static_cast<std::ptrdiff_t>(bl.weights),
                            params.begin() + static_cast<std::ptrdiff_t>(bl.weights + bl.n_int * bl.n_dich));
  return e;
}

std::size_t nln_model::preprocessing_nodes() const {
  std::size_t shared = 0, per_rule = 0;
  for (const auto& bl : blocks) shared += bl.n_dich + bl.n_int;
  for (const auto& s : slots)
    if (s.kind != feature_kind::binary) ++per_rule;
  return shared + per_rule * n_rules;
}

nln_model build_model(const schema& s, std::size_t n_rules, std::size_t n_targets,
                      std::uint64_t seed, const model_options& opt) {
  if (!s.targets.empty() && s.n_outputs() != n_targets)
    throw schema_error("schema declares " + std::to_string(s.n_outputs()) + " outputs, not " +
                       std::to_string(n_targets));
  nln_model m;
  m.schema = s;
  m.options = opt;
  wire(m, n_rules, n_targets);
  initialize(m, seed);
  return m;
}

void initialize(nln_model& m, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> pos(0.0, 1.0);
  for (const auto& bl : m.blocks) {
    const auto& f = m.schema.features[bl.feature];
    auto e = init_dichotomies_regular(f.lo, f.hi, bl.n_dich, m.options.sharpness_k);
    for (std::size_t k = 0; k < bl.n_dich; ++k) {
      m.params[bl.boundary + k] = e.dichotomies[k].boundary;
      m.params[bl.sharpness + k] = e.dichotomies[k].sharpness;
    }
    std::copy(e.interval_weights.begin(), e.interval_weights.end(),
              m.params.begin() + static_cast<std::ptrdiff_t>(bl.weights));
  }
  for (std::size_t r = 0; r < m.n_rules; ++r) init_rule(m, r, rng);
  for (std::size_t i = m.out_base; i < m.out_bias_base; ++i) m.params[i] = pos(rng);
  for (std::size_t k = 0; k < m.n_outputs; ++k) m.out_bias(k) = 0.0;
  m.thresholds.clear();
  m.discretized = false;
  m.postprocessed = false;
}

void reset_rule(nln_model& m, std::size_t r, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  init_rule(m, r, rng);
  for (std::size_t k = 0; k < m.n_outputs; ++k) m.out_weight(k, r) = 0.0;
}

void project_param(const nln_model& m, std::size_t i, double& v) {
  switch (m.kinds[i]) {
    case param_kind::and_weight:
    case param_kind::interval_weight: v = std::clamp(v, -1.0, 1.0); break;
    case param_kind::boundary: break;
    case param_kind::sharpness: v = std::max(v, m.options.sharpness_min); break;
    default: v = std::clamp(v, 0.0, 1.0); break;
  }
}

void project(nln_model& m) {
  for (std::size_t i = 0; i < m.params.size(); ++i) project_param(m, i, m.params[i]);
}

std::vector<double> encoder_forward(const nln_model& m, const double* row, std::size_t rule) {
  if (rule >= m.n_rules) throw dimension_error("rule index out of range");
  row_state st;
  st.resize(m);
  forward_row(m, row, st);
  const std::size_t S = m.n_slots();
  return {st.slot.begin() + static_cast<std::ptrdiff_t>(rule * S),
          st.slot.begin() + static_cast<std::ptrdiff_t>((rule + 1) * S)};
}

std::vector<double> model_forward(const nln_model& m, const double* row) {
  row_state st;
  st.resize(m);
  forward_row(m, row, st);
  return st.out;
}

std::vector<int> predict(const nln_model& m, const std::vector<double>& probs) {
  if (probs.size() != m.n_outputs) throw dimension_error("probability vector has wrong length");
  if (m.task() == task_kind::multiclass) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < probs.size(); ++k)
      if (probs[k] > probs[best]) best = k;
    return {static_cast<int>(best)};
  }
  if (m.thresholds.size() != m.n_outputs) throw threshold_error("decision threshold not fitted");
  std::vector<int> out(probs.size());
  for (std::size_t k = 0; k < probs.size(); ++k) out[k] = probs[k] >= m.thresholds[k] ? 1 : 0;
  return out;
}

prediction predict_row(const nln_model& m, const double* row) {
  prediction p;
  p.probabilities = model_forward(m, row);
  p.labels = predict(m, p.probabilities);
  return p;
}

std::vector<double> rule_activation_unbiased(const nln_model& m, const dataset& d, std::size_t rule) {
  std::vector<double> out(d.n_rows);
  row_state st;
  st.resize(m);
  const std::size_t S = m.n_slots();
  for (std::size_t r = 0; r < d.n_rows; ++r) {
    forward_row(m, d.row(r), st);
    double c = 1.0;
    for (std::size_t s = 0; s < S; ++s) c *= and_factor(m.and_weight(rule, s), st.slot[rule * S + s]);
    out[r] = clamp_unit(c);
  }
  return out;
}

namespace {

std::size_t set_size(const nln_model& m) { return m.n_sets == 0 ? 0 : m.rule_base / m.n_sets; }

void copy_range(const nln_model& src, std::size_t from, std::size_t n, nln_model& dst, std::size_t to) {
  std::copy(src.params.begin() + static_cast<std::ptrdiff_t>(from),
            src.params.begin() + static_cast<std::ptrdiff_t>(from + n),
            dst.params.begin() + static_cast<std::ptrdiff_t>(to));
}

}  // namespace

nln_model keep_rules(const nln_model& m, const std::vector<std::size_t>& rules) {
  if (rules.empty()) throw precondition_error("a model needs at least one rule");
  std::vector<std::uint32_t> used;
  for (std::size_t r : rules) {
    if (r >= m.n_rules) throw dimension_error("rule index out of range");
    used.push_back(m.rule_set[r]);
  }
  std::sort(used.begin(), used.end());
  used.erase(std::unique(used.begin(), used.end()), used.end());

  nln_model out;
  out.schema = m.schema;
  out.options = m.options;
  wire(out, rules.size(), m.n_outputs, used.size());
  const std::size_t chunk = set_size(m);
  for (std::size_t i = 0; i < used.size(); ++i) copy_range(m, used[i] * chunk, chunk, out, i * chunk);
  for (std::size_t i = 0; i < rules.size(); ++i) {
    copy_range(m, m.rule_offset(rules[i]), m.rule_stride, out, out.rule_offset(i));
    out.rule_set[i] = static_cast<std::uint32_t>(
        std::lower_bound(used.begin(), used.end(), m.rule_set[rules[i]]) - used.begin());
    for (std::size_t k = 0; k < m.n_outputs; ++k) out.out_weight(k, i) = m.out_weight(k, rules[i]);
  }
  for (std::size_t k = 0; k < m.n_outputs; ++k) out.out_bias(k) = m.out_bias(k);
  out.thresholds = m.thresholds;
  out.discretized = m.discretized;
  out.postprocessed = m.postprocessed;
  return out;
}

nln_model concatenate(const std::vector<nln_model>& models) {
  if (models.empty()) throw precondition_error("nothing to concatenate");
  const nln_model& first = models.front();
  std::size_t rules = 0, sets = 0;
  for (const auto& m : models) {
    bool same = m.n_outputs == first.n_outputs && m.slots.size() == first.slots.size() &&
                m.rule_stride == first.rule_stride && set_size(m) == set_size(first) &&
                m.options.n_dichotomies == first.options.n_dichotomies;
    for (std::size_t f = 0; same && f < m.schema.features.size(); ++f)
      same = m.schema.features[f].name == first.schema.features[f].name &&
             m.schema.features[f].kind == first.schema.features[f].kind;
    if (!same) throw schema_error("models have different schemas");
    rules += m.n_rules;
    sets += m.n_sets;
  }
  nln_model out;
  out.schema = first.schema;
  out.options = first.options;
  wire(out, rules, first.n_outputs, sets);
  const std::size_t chunk = set_size(first);
  std::size_t next_rule = 0, next_set = 0;
  for (const auto& m : models) {
    copy_range(m, 0, m.n_sets * chunk, out, next_set * chunk);
    for (std::size_t r = 0; r < m.n_rules; ++r, ++next_rule) {
      copy_range(m, m.rule_offset(r), m.rule_stride, out, out.rule_offset(next_rule));
      out.rule_set[next_rule] = static_cast<std::uint32_t>(next_set + m.rule_set[r]);
      for (std::size_t k = 0; k < m.n_outputs; ++k) out.out_weight(k, next_rule) = m.out_weight(k, r);
    }
    next_set += m.n_sets;
  }
  for (std::size_t k = 0; k < first.n_outputs; ++k) {
    double keep = 1.0;
    for (const auto& m : models) keep *= 1.0 - m.out_bias(k);
    out.out_bias(k) = 1.0 - keep;
  }
  out.thresholds = first.thresholds;
  out.discretized =
      std::all_of(models.begin(), models.end(), [](const nln_model& m) { return m.discretized; });
  return out;
}

// ---- serialization ----

namespace {

constexpr const char* magic = "nln-model";
constexpr int format_version = 1;

std::string num(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

double parse_num(const std::string& tok) {
  double v = 0.0;
  auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (res.ec != std::errc() || res.ptr != tok.data() + tok.size())
    throw format_error("bad number '" + tok + "' in model file");
  return v;
}

std::string expect_line(std::istream& in, const std::string& key) {
  std::string line;
  if (!std::getline(in, line)) throw format_error("model file truncated before '" + key + "'");
  if (line.rfind(key, 0) != 0) throw format_error("expected '" + key + "', got '" + line + "'");
  return line.substr(key.size());
}

}  // namespace

void save_model(std::ostream& out, const nln_model& m) {
  out << magic << ' ' << format_version << '\n';
  std::ostringstream sch;
  write_schema(sch, m.schema);
  const std::string text = sch.str();
  const auto lines = std::count(text.begin(), text.end(), '\n');
  out << "schema " << lines << '\n' << text;
  out << "options " << m.options.n_dichotomies << ' ' << num(m.options.sharpness_k) << ' '
      << num(m.options.sharpness_min) << '\n';
  out << "shape " << m.n_rules << ' ' << m.n_outputs << ' ' << m.n_sets << '\n';
  out << "rule-sets";
  for (auto v : m.rule_set) out << ' ' << v;
  out << '\n';
  out << "flags " << (m.discretized ? 1 : 0) << ' ' << (m.postprocessed ? 1 : 0) << '\n';
  out << "thresholds " << m.thresholds.size();
  for (double t : m.thresholds) out << ' ' << num(t);
  out << '\n';
  out << "params " << m.params.size() << '\n';
  for (std::size_t i = 0; i < m.params.size(); ++i)
    out << num(m.params[i]) << ((i % 8 == 7 || i + 1 == m.params.size()) ? '\n' : ' ');
  out << "end\n";
}

nln_model load_model(std::istream& in) {
  std::string head;
  std::getline(in, head);
  std::istringstream hs(head);
  std::string word;
  int version = 0;
  hs >> word >> version;
  if (word != magic) throw format_error("not a model file");
  if (version != format_version) throw format_error("unsupported model format version");

  std::size_t n_lines = std::stoul(expect_line(in, "schema "));
  std::string text, line;
  for (std::size_t i = 0; i < n_lines; ++i) {
    if (!std::getline(in, line)) throw format_error("model file truncated in schema");
    text += line + '\n';
  }
  std::istringstream ss(text);
  nln_model m;
  m.schema = parse_schema(ss);

  std::istringstream os(expect_line(in, "options "));
  std::string a, b, c;
  os >> a >> b >> c;
  m.options.n_dichotomies = std::stoul(a);
  m.options.sharpness_k = parse_num(b);
  m.options.sharpness_min = parse_num(c);

  std::istringstream sh(expect_line(in, "shape "));
  std::size_t R = 0, K = 0, sets = 1;
  sh >> R >> K >> sets;
  wire(m, R, K, sets);
  std::istringstream rs(expect_line(in, "rule-sets"));
  for (std::size_t r = 0; r < R; ++r) {
    std::size_t v = 0;
    if (!(rs >> v) || v >= sets) throw format_error("bad rule set index");
    m.rule_set[r] = static_cast<std::uint32_t>(v);
  }

  std::istringstream fl(expect_line(in, "flags "));
  int d = 0, p = 0;
  fl >> d >> p;
  m.discretized = d != 0;
  m.postprocessed = p != 0;

  std::istringstream th(expect_line(in, "thresholds "));
  std::size_t nt = 0;
  th >> nt;
  for (std::size_t i = 0; i < nt; ++i) {
    std::string t;
    th >> t;
    m.thresholds.push_back(parse_num(t));
  }

  const std::size_t np = std::stoul(expect_line(in, "params "));
  if (np != m.params.size())
    throw format_error("parameter count " + std::to_string(np) + " does not match layout " +
                       std::to_string(m.params.size()));
  for (std::size_t i = 0; i < np; ++i) {
    std::string t;
    if (!(in >> t)) throw format_error("model file truncated in parameters");
    m.params[i] = parse_num(t);
  }
  in >> word;
  if (word != "end") throw format_error("missing end marker");
  return m;
}

void save_model(const std::string& path, const nln_model& m) {
  std::ofstream out(path);
  if (!out) throw format_error("cannot write model file '" + path + "'");
  save_model(out, m);
}

nln_model load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw format_error("cannot open model file '" + path + "'");
  return load_model(in);
}

}  // namespace nln
