#include "nln/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <map>
#include <numeric>
#include <ostream>
#include <random>
#include <set>
#include <thread>

#include "nln/error.hpp"
#include "nln/log.hpp"

namespace nln {

namespace {

std::uint64_t mix(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::vector<std::size_t> iota_rows(std::size_t n) {
  std::vector<std::size_t> v(n);
  std::iota(v.begin(), v.end(), std::size_t{0});
  return v;
}

double mean_of(const std::vector<double>& v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double std_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

}  // namespace

std::size_t subsample_size(std::size_t n, double ratio) {
  if (!(ratio > 0.0 && ratio <= 1.0)) throw domain_error("subsample ratio must lie in (0,1]");
  // The small slack keeps products such as 0.5 * 3 = 1.5 on the upper side.
  const double exact = ratio * static_cast<double>(n);
  return std::min(n, static_cast<std::size_t>(std::floor(exact + 0.5 + 1e-9)));
}

dataset subsample_ratio(const dataset& d, double ratio, std::uint64_t seed) {
  const std::size_t size = subsample_size(d.n_rows, ratio);
  auto rows = iota_rows(d.n_rows);
  std::mt19937_64 rng(seed);
  std::shuffle(rows.begin(), rows.end(), rng);
  rows.resize(size);
  std::sort(rows.begin(), rows.end());
  return d.subset(rows);
}

fold_plan kfold_split(const dataset& d, std::size_t k, std::uint64_t seed) {
  if (k < 2) throw precondition_error("k-fold cross-validation needs k >= 2");
  if (d.n_rows < k) throw precondition_error("fewer rows than folds");
  fold_plan plan;
  plan.test.resize(k);
  std::mt19937_64 rng(seed);
  const auto st = strata(d);
  std::map<int, std::vector<std::size_t>> groups;
  for (std::size_t r = 0; r < d.n_rows; ++r) groups[st[r]].push_back(r);
  bool usable = !groups.count(-1);
  for (const auto& [key, rows] : groups)
    if (rows.size() < k) usable = false;
  if (!usable) {
    plan.stratified = false;
    if (!groups.count(-1)) log_warning("a class has fewer rows than folds; using unstratified folds");
    groups.clear();
    groups[0] = iota_rows(d.n_rows);
  }
  // Deal each shuffled stratum round-robin, continuing where the last one stopped.
  std::size_t next = 0;
  for (auto& [key, rows] : groups) {
    std::shuffle(rows.begin(), rows.end(), rng);
    for (std::size_t r : rows) plan.test[next++ % k].push_back(r);
  }
  for (auto& f : plan.test) std::sort(f.begin(), f.end());
  return plan;
}

nln_model run_pipeline(const dataset& train, const pipeline_config& cfg, std::uint64_t seed) {
  dataset d = train;
  d.schema = with_data_ranges(train.schema, train);
  nln_model m = build_model(d.schema, cfg.n_rules, d.n_outputs(), seed, cfg.model);
  train_config tc = cfg.train;
  tc.seed = seed;
  fit(m, d, tc);
  if (cfg.postprocess) {
    postprocess_config pc = cfg.post;
    pc.retrain_cfg.seed = mix(seed, 1);
    postprocess(m, d, pc);
  }
  fit_thresholds(m, d);
  return m;
}

pipeline make_pipeline(const pipeline_config& cfg) {
  return [cfg](const dataset& train, std::uint64_t seed) { return run_pipeline(train, cfg, seed); };
}

std::pair<std::size_t, double> model_size(const nln_model& m) {
  if (!m.discretized) return {active_rules(m).size(), 0.0};
  const auto p = extract_program(m);
  return {p.rules.size(), mean_rule_size(p)};
}

std::size_t default_threads() {
  if (const char* env = std::getenv("NLN_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v > 0) return static_cast<std::size_t>(v);
  }
  return std::max(1U, std::thread::hardware_concurrency());
}

cv_result kfold_cv(const dataset& d, std::size_t k, std::size_t repeats, const pipeline& p, std::uint64_t seed,
                   std::size_t threads, bool keep_models) {
  if (repeats == 0) throw precondition_error("at least one repeat is needed");
  cv_result res;
  res.seed = seed;
  std::vector<fold_plan> plans;
  for (std::size_t r = 0; r < repeats; ++r) {
    plans.push_back(kfold_split(d, k, mix(seed, r)));
    res.stratified = res.stratified && plans.back().stratified;
  }
  const std::size_t jobs = repeats * k;
  res.folds.resize(jobs);
  if (keep_models) res.models.resize(jobs);
  std::vector<std::exception_ptr> errors(jobs);

  auto run = [&](std::size_t j) {
    const std::size_t r = j / k, f = j % k;
    const auto& test_rows = plans[r].test[f];
    std::vector<char> in_test(d.n_rows, 0);
    for (std::size_t i : test_rows) in_test[i] = 1;
    std::vector<std::size_t> train_rows;
    for (std::size_t i = 0; i < d.n_rows; ++i)
      if (!in_test[i]) train_rows.push_back(i);
    fold_result& out = res.folds[j];
    out.repeat = r;
    out.fold = f;
    out.seed = mix(seed, 1000 + j);
    out.train_rows = train_rows.size();
    out.test_rows = test_rows.size();
    const auto start = std::chrono::steady_clock::now();
    nln_model m = p(d.subset(train_rows), out.seed);
    out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    out.test = evaluate(m, d.subset(test_rows));
    std::tie(out.rules, out.rule_size) = model_size(m);
    if (keep_models) res.models[j] = std::move(m);
  };

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t j; (j = next.fetch_add(1)) < jobs;) {
      try {
        run(j);
      } catch (...) {
        errors[j] = std::current_exception();
      }
    }
  };
  const std::size_t n_threads = std::min(jobs, threads ? threads : default_threads());
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);

  std::vector<double> f1, acc, row_acc, rules, size;
  for (const auto& f : res.folds) {
    f1.push_back(f.test.f1);
    acc.push_back(f.test.accuracy);
    row_acc.push_back(f.test.row_accuracy);
    rules.push_back(static_cast<double>(f.rules));
    size.push_back(f.rule_size);
  }
  res.mean = {mean_of(f1), std_of(f1), mean_of(acc), std_of(acc), mean_of(row_acc), mean_of(rules), mean_of(size)};
  return res;
}

void write_folds_csv(std::ostream& out, const cv_result& r) {
  out << "repeat,fold,seed,train_rows,test_rows,f1,accuracy,row_accuracy,rules,rule_size,seconds\n";
  for (const auto& f : r.folds)
    out << f.repeat << ',' << f.fold << ',' << f.seed << ',' << f.train_rows << ',' << f.test_rows << ','
        << f.test.f1 << ',' << f.test.accuracy << ',' << f.test.row_accuracy << ',' << f.rules << ','
        << f.rule_size << ',' << f.seconds << '\n';
}

namespace {

bool crisp_literal(const literal& l, const double* row) {
  const double x = row[l.feature];
  bool v = false;
  switch (l.kind) {
    case feature_kind::binary: v = x == 1.0; break;
    case feature_kind::categorical:
      v = std::find(l.values.begin(), l.values.end(), static_cast<std::size_t>(x)) != l.values.end();
      break;
    case feature_kind::continuous: throw precondition_error("recovery needs binary or categorical literals");
  }
  return v == l.positive;
}

bool crisp_rule(const rule& r, const double* row) {
  for (const auto& l : r.literals)
    if (!crisp_literal(l, row)) return false;
  return true;
}

bool same_rule(const rule& a, const rule& b) {
  if (a.target != b.target || a.literals.size() != b.literals.size()) return false;
  for (std::size_t i = 0; i < a.literals.size(); ++i) {
    const auto &x = a.literals[i], &y = b.literals[i];
    if (x.feature != y.feature || x.positive != y.positive || x.values != y.values) return false;
  }
  return true;
}

}  // namespace

recovery recovery_score(const logic_program& extracted, const logic_program& truth) {
  const auto& feats = truth.schema.features;
  if (extracted.schema.features.size() != feats.size() || extracted.targets != truth.targets)
    throw schema_error("programs use different features or targets");
  std::set<std::size_t> used;
  for (const auto* p : {&extracted, &truth})
    for (const auto& r : p->rules)
      for (const auto& l : r.literals) {
        if (feats[l.feature].kind == feature_kind::continuous)
          throw precondition_error("recovery needs binary or categorical features");
        used.insert(l.feature);
      }
  std::vector<std::size_t> vars(used.begin(), used.end()), radix;
  double points = 1.0;
  for (std::size_t f : vars) {
    radix.push_back(feats[f].kind == feature_kind::binary ? 2 : feats[f].values.size());
    points *= static_cast<double>(radix.back());
  }
  if (points > static_cast<double>(std::size_t{1} << 20)) throw capacity_error("recovery domain exceeds 2^20 points");
  const auto n_points = static_cast<std::size_t>(points);

  // Firing of every rule and of every target over the whole domain.
  auto table = [&](const logic_program& p, std::vector<std::vector<char>>& rule_fire,
                   std::vector<std::vector<char>>& target_fire) {
    rule_fire.assign(p.rules.size(), std::vector<char>(n_points, 0));
    target_fire.assign(p.targets.size(), std::vector<char>(n_points, 0));
    std::vector<double> row(feats.size(), 0.0);
    std::vector<std::size_t> digit(vars.size(), 0);
    for (std::size_t a = 0; a < n_points; ++a) {
      for (std::size_t i = 0; i < vars.size(); ++i) row[vars[i]] = static_cast<double>(digit[i]);
      for (std::size_t r = 0; r < p.rules.size(); ++r)
        if (crisp_rule(p.rules[r], row.data())) {
          rule_fire[r][a] = 1;
          target_fire[p.rules[r].target][a] = 1;
        }
      for (std::size_t i = 0; i < vars.size() && ++digit[i] == radix[i]; ++i) digit[i] = 0;
    }
  };
  std::vector<std::vector<char>> ext_rule, ext_target, truth_rule, truth_target;
  table(extracted, ext_rule, ext_target);
  table(truth, truth_rule, truth_target);
  auto covered = [&](const std::vector<char>& fires, const std::vector<char>& target) {
    for (std::size_t a = 0; a < n_points; ++a)
      if (fires[a] && !target[a]) return false;
    return true;
  };

  recovery out;
  out.truth_rules = truth.rules.size();
  out.extracted_rules = extracted.rules.size();
  for (std::size_t i = 0; i < truth.rules.size(); ++i) {
    const auto& t = truth.rules[i];
    const bool same = std::any_of(extracted.rules.begin(), extracted.rules.end(),
                                  [&](const rule& e) { return same_rule(e, t); });
    if (same || covered(truth_rule[i], ext_target[t.target])) ++out.recovered;
  }
  for (std::size_t i = 0; i < extracted.rules.size(); ++i) {
    const auto& e = extracted.rules[i];
    const bool same = std::any_of(truth.rules.begin(), truth.rules.end(),
                                  [&](const rule& t) { return same_rule(e, t); });
    if (!same && !covered(ext_rule[i], truth_target[e.target])) ++out.excess;
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

ground_truth_program to_ground_truth(const logic_program& p, const std::vector<double>& thresholds,
                                     const std::vector<std::string>& variables) {
  const std::size_t n = variables.size();
  if (p.schema.features.size() != n || p.targets.size() != n)
    throw schema_error("program does not match the variable set");
  if (thresholds.size() != n) throw threshold_error("one decision threshold per target is needed");
  for (const auto& f : p.schema.features)
    if (f.kind != feature_kind::binary) throw schema_error("Boolean programs need binary features");
  ground_truth_program g;
  g.variables = variables;
  for (std::size_t k = 0; k < n; ++k)
    if (p.target_bias[k] >= thresholds[k]) g.rules.push_back({{}, k});
  for (const auto& r : p.rules) {
    const double alone = 1.0 - (1.0 - p.target_bias[r.target]) * (1.0 - r.bias);
    if (alone < thresholds[r.target]) continue;
    bool_rule br;
    br.head = r.target;
    for (const auto& l : r.literals) {
      if (l.kind != feature_kind::binary) throw schema_error("Boolean programs need binary literals");
      br.body.push_back({l.feature, l.positive});
    }
    std::sort(br.body.begin(), br.body.end());
    if (std::find(g.rules.begin(), g.rules.end(), br) == g.rules.end()) g.rules.push_back(br);
  }
  return g;
}

boolbench_config boolbench_defaults() {
  boolbench_config c;
  c.pipeline.train.validation_fraction = 0.0;
  c.pipeline.train.max_epochs = 500;
  return c;
}

boolbench_result boolbench(const std::string& name, const ground_truth_program& truth, const boolbench_config& cfg) {
  truth.validate();
  boolbench_result res;
  res.name = name;
  res.variables = truth.size();
  res.truth_rules = truth.rules.size();
  res.ratio = cfg.ratio;
  const dataset full = generate_transitions(truth);
  const dataset sub = subsample_ratio(full, cfg.ratio, cfg.seed);
  res.rows = sub.n_rows;
  res.cv = kfold_cv(sub, cfg.k, cfg.repeats, make_pipeline(cfg.pipeline), mix(cfg.seed, 7), cfg.threads, true);
  std::vector<double> rec, exc;
  for (const auto& m : res.cv.models) {
    if (!m.discretized) continue;
    const auto g = to_ground_truth(extract_program(m), m.thresholds, truth.variables);
    const auto sc = recovery_score(g, truth);
    rec.push_back(sc.recovered_pct);
    exc.push_back(sc.excess_pct);
  }
  res.recovered_pct = mean_of(rec);
  res.excess_pct = mean_of(exc);
  return res;
}

void write_boolbench_row(std::ostream& out, const boolbench_result& r, bool header) {
  if (header) out << "dataset,variables,rules,ratio,rows,folds,accuracy,accuracy_std,row_accuracy,f1,model_rules,recovered,excess,seed\n";
  out << r.name << ',' << r.variables << ',' << r.truth_rules << ',' << r.ratio << ',' << r.rows << ','
      << r.cv.folds.size() << ',' << 100.0 * r.cv.mean.accuracy << ',' << 100.0 * r.cv.mean.accuracy_std << ','
      << 100.0 * r.cv.mean.row_accuracy << ',' << 100.0 * r.cv.mean.f1 << ',' << r.cv.mean.rules << ','
      << r.recovered_pct << ',' << r.excess_pct << ',' << r.cv.seed << '\n';
}

}  // namespace nln
