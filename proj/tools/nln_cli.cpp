#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "nln/boolnet.hpp"
#include "nln/dataset.hpp"
#include "nln/error.hpp"
#include "nln/harness.hpp"
#include "nln/log.hpp"
#include "nln/metrics.hpp"
#include "nln/model.hpp"
#include "nln/oracle.hpp"
#include "nln/postprocess.hpp"
#include "nln/rules.hpp"
#include "nln/training.hpp"

using namespace nln;

namespace {

constexpr int exit_usage = 2;
constexpr int exit_failure = 1;

struct data_opts {
  std::string schema, data, missing = "?";
};

void add_data(CLI::App* cmd, data_opts& o, bool schema_required) {
  auto* s = cmd->add_option("--schema", o.schema, "Schema file");
  if (schema_required) s->required();
  cmd->add_option("--data", o.data, "CSV data file")->required();
  cmd->add_option("--missing", o.missing, "Token marking a missing value");
}

dataset read_data(const data_opts& o, const schema* fallback = nullptr) {
  if (!o.schema.empty()) return load_csv(o.data, o.schema, o.missing);
  return load_csv(o.data, *fallback, o.missing);
}

void add_training(CLI::App* cmd, pipeline_config& p) {
  auto& t = p.train;
  cmd->add_option("--rules", p.n_rules, "Rule modules")->check(CLI::PositiveNumber);
  cmd->add_option("--dichotomies", p.model.n_dichotomies, "Fuzzy dichotomies per continuous feature")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--epochs", t.max_epochs, "Maximum epochs");
  cmd->add_option("--patience", t.patience, "Early-stopping patience in epochs");
  cmd->add_option("--lr", t.learning_rate, "ADAM learning rate");
  cmd->add_option("--batch", t.batch_size, "Minibatch size")->check(CLI::PositiveNumber);
  cmd->add_option("--validation", t.validation_fraction, "Validation fraction")->check(CLI::Range(0.0, 0.9));
  cmd->add_option("--lambda-nonempty", t.lambda_nonempty, "Non-empty definition penalty");
  cmd->add_option("--lambda-sparsity", t.lambda_sparsity, "L1 penalty");
}

void add_post(CLI::App* cmd, std::string& strategy, bool& no_retrain, bool& keep_included) {
  cmd->add_option("--strategy", strategy, "descending, ascending, subtractive or additive");
  cmd->add_flag("--no-retrain", no_retrain, "Skip retraining of continuous parameters");
  cmd->add_flag("--keep-included", keep_included, "Do not remove included rules");
}

void apply_post(postprocess_config& pc, const std::string& strategy, bool no_retrain, bool keep_included) {
  pc.strategy = parse_strategy(strategy);
  pc.retrain = !no_retrain;
  pc.eliminate_included = !keep_included;
}

template <class F>
void with_output(const std::string& path, F&& write) {
  if (path.empty() || path == "-") {
    write(std::cout);
    return;
  }
  std::ofstream out(path);
  if (!out) throw data_error("cannot write '" + path + "'");
  write(out);
}

void print_metrics(const std::string& label, const metrics& m) {
  std::cout << label << " f1 " << 100.0 * m.f1 << " accuracy " << 100.0 * m.accuracy << " row_accuracy "
            << 100.0 * m.row_accuracy << " rows " << m.rows << '\n';
}

ground_truth_program resolve_program(const std::string& name_or_path) {
  std::ifstream probe(name_or_path);
  if (probe) return load_ground_truth(name_or_path);
  return load_ground_truth(std::string(NLN_DATA_DIR) + "/boolean/" + name_or_path + ".txt");
}

std::string stem(const std::string& path) {
  auto base = path.substr(path.find_last_of('/') + 1);
  return base.substr(0, base.find('.'));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Neural logic networks: training, post-processing and rule extraction"};
  app.require_subcommand(1);
  app.fallthrough();  // global options may follow the subcommand
  app.set_config("--config", "", "INI or TOML file with option values");
  std::string log = "warning";
  app.add_option("--log", log, "quiet, warning or info")->check(CLI::IsMember({"quiet", "warning", "info"}));
  std::uint64_t seed = 1;
  app.add_option("--seed", seed, "Random seed");

  // train
  data_opts train_data;
  pipeline_config train_cfg;
  std::string train_out, train_history;
  auto* train = app.add_subcommand("train", "Fit a model");
  add_data(train, train_data, true);
  add_training(train, train_cfg);
  train->add_option("--out", train_out, "Model file")->required();
  train->add_option("--history", train_history, "Per-epoch CSV");

  // postprocess
  data_opts pp_data;
  postprocess_config pp_cfg;
  std::string pp_model, pp_out, pp_report, pp_strategy = "descending";
  bool pp_no_retrain = false, pp_keep = false;
  auto* pp = app.add_subcommand("postprocess", "Discretize, retrain, prune and re-bias a trained model");
  add_data(pp, pp_data, false);
  pp->add_option("--model", pp_model, "Trained model file")->required();
  pp->add_option("--out", pp_out, "Output model file")->required();
  pp->add_option("--report", pp_report, "Stage report CSV");
  add_post(pp, pp_strategy, pp_no_retrain, pp_keep);

  // eval
  data_opts ev_data;
  std::string ev_model;
  bool ev_refit = false;
  auto* ev = app.add_subcommand("eval", "Score a model on a dataset");
  add_data(ev, ev_data, false);
  ev->add_option("--model", ev_model, "Model file")->required();
  ev->add_flag("--refit-thresholds", ev_refit, "Fit decision thresholds on this dataset first");

  // export
  data_opts ex_data;
  std::string ex_model, ex_format = "text", ex_out;
  render_options ex_render;
  auto* ex = app.add_subcommand("export", "Write the logic program of a post-processed model");
  ex->add_option("--model", ex_model, "Model file")->required();
  ex->add_option("--format", ex_format, "text, dot, coverage or coverage-csv")
      ->check(CLI::IsMember({"text", "dot", "coverage", "coverage-csv"}));
  ex->add_option("--out", ex_out, "Output file (default stdout)");
  ex->add_option("--digits", ex_render.digits, "Significant digits of boundaries")->check(CLI::Range(1, 17));
  ex->add_option("--schema", ex_data.schema, "Schema file (coverage and ordering)");
  ex->add_option("--data", ex_data.data, "CSV data (coverage and ordering)");
  ex->add_option("--missing", ex_data.missing, "Token marking a missing value");

  // boolbench
  boolbench_config bb_cfg = boolbench_defaults();
  std::vector<std::string> bb_programs;
  std::vector<double> bb_ratios;
  std::string bb_out, bb_folds;
  auto* bb = app.add_subcommand("boolbench", "Boolean network discovery from subsampled transitions");
  bb->add_option("--program", bb_programs, "Shipped network name or ground-truth file")->required();
  bb->add_option("--ratio", bb_ratios, "Fractions of all transitions")->check(CLI::Range(0.0, 1.0));
  bb->add_option("--folds", bb_cfg.k, "Folds")->check(CLI::Range(2, 1000));
  bb->add_option("--repeats", bb_cfg.repeats, "Cross-validation repeats")->check(CLI::PositiveNumber);
  bb->add_option("--threads", bb_cfg.threads, "Worker threads (0: NLN_THREADS or hardware)");
  bb->add_option("--out", bb_out, "Result CSV (default stdout)");
  bb->add_option("--fold-csv", bb_folds, "Per-fold CSV");
  add_training(bb, bb_cfg.pipeline);

  // crossval
  data_opts cv_data;
  pipeline_config cv_cfg;
  std::size_t cv_k = 5, cv_repeats = 1, cv_threads = 0;
  std::string cv_out, cv_strategy = "descending";
  bool cv_raw = false, cv_no_retrain = false, cv_keep = false;
  auto* cv = app.add_subcommand("crossval", "Repeated stratified k-fold cross-validation of the full pipeline");
  add_data(cv, cv_data, true);
  add_training(cv, cv_cfg);
  add_post(cv, cv_strategy, cv_no_retrain, cv_keep);
  cv->add_option("--folds", cv_k, "Folds")->check(CLI::Range(2, 1000));
  cv->add_option("--repeats", cv_repeats, "Repeats")->check(CLI::PositiveNumber);
  cv->add_option("--threads", cv_threads, "Worker threads (0: NLN_THREADS or hardware)");
  cv->add_flag("--no-postprocess", cv_raw, "Evaluate the continuous model");
  cv->add_option("--out", cv_out, "Per-fold CSV");

  // merge
  data_opts mg_data;
  std::vector<std::string> mg_models;
  std::string mg_out, mg_report;
  std::size_t mg_max_rules = 0;
  auto* mg = app.add_subcommand("merge", "Merge post-processed models, optionally keeping the best small subset");
  add_data(mg, mg_data, false);
  mg->add_option("--models", mg_models, "Post-processed model files")->required();
  mg->add_option("--out", mg_out, "Merged model file")->required();
  mg->add_option("--max-rules", mg_max_rules, "Keep the best subset of at most this many rules (0: all)");
  mg->add_option("--report", mg_report, "Stage report CSV");

  // oracle
  gap_config or_cfg;
  std::vector<std::size_t> or_widths;
  std::string or_out;
  auto* orc = app.add_subcommand("oracle", "Exact versus factorized inference on random AND networks");
  orc->add_option("--width", or_widths, "Network widths")->check(CLI::Range(1, 6));
  orc->add_option("--depth", or_cfg.depth, "Layers")->check(CLI::PositiveNumber);
  orc->add_option("--trials", or_cfg.trials, "Networks per width")->check(CLI::PositiveNumber);
  orc->add_option("--points", or_cfg.points, "Sampled points per network")->check(CLI::PositiveNumber);
  orc->add_option("--out", or_out, "CSV (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    std::cerr << app.help();
    return exit_usage;
  }

  set_log_level(log == "quiet" ? log_level::quiet : log == "info" ? log_level::info : log_level::warning);

  try {
    if (*train) {
      dataset d = read_data(train_data);
      d.schema = with_data_ranges(d.schema, d);
      nln_model m = build_model(d.schema, train_cfg.n_rules, d.n_outputs(), seed, train_cfg.model);
      train_config tc = train_cfg.train;
      tc.seed = seed;
      tc.verbose = log == "info";
      const auto h = fit(m, d, tc);
      fit_thresholds(m, d);
      save_model(train_out, m);
      if (!train_history.empty()) with_output(train_history, [&](std::ostream& o) { write_history_csv(o, h); });
      std::cout << "epochs " << h.epochs.size() << " best " << h.best_epoch << " seed " << seed << '\n';
      print_metrics("train", evaluate(m, d));
    } else if (*pp) {
      nln_model m = load_model(pp_model);
      const dataset d = read_data(pp_data, &m.schema);
      apply_post(pp_cfg, pp_strategy, pp_no_retrain, pp_keep);
      pp_cfg.retrain_cfg.seed = seed;
      const auto reports = postprocess(m, d, pp_cfg);
      fit_thresholds(m, d);
      save_model(pp_out, m);
      if (!pp_report.empty()) with_output(pp_report, [&](std::ostream& o) { write_reports(o, reports); });
      for (const auto& r : reports)
        std::cout << r.stage << " loss " << r.loss_before << " -> " << r.loss_after << " rules " << r.rules_after << '\n';
      print_metrics("train", evaluate(m, d));
    } else if (*ev) {
      nln_model m = load_model(ev_model);
      const dataset d = read_data(ev_data, &m.schema);
      if (ev_refit) fit_thresholds(m, d);
      const auto [rules, size] = model_size(m);
      print_metrics("eval", evaluate(m, d));
      std::cout << "rules " << rules << " mean_size " << size << '\n';
    } else if (*ex) {
      const nln_model m = load_model(ex_model);
      dataset d;
      const bool have_data = !ex_data.data.empty();
      if (have_data) d = read_data(ex_data, &m.schema);
      if (ex_format == "coverage" || ex_format == "coverage-csv") {
        if (!have_data) throw precondition_error("coverage needs --data");
        const auto t = coverage_breakdown(m, d);
        with_output(ex_out, [&](std::ostream& o) {
          ex_format == "coverage" ? write_coverage_text(o, t) : write_coverage_csv(o, t);
        });
      } else {
        const auto p = extract_program(m, have_data ? &d : nullptr);
        with_output(ex_out, [&](std::ostream& o) {
          ex_format == "dot" ? render_graph(o, p, ex_render) : render_text(o, p, ex_render);
        });
      }
    } else if (*bb) {
      if (bb_ratios.empty()) bb_ratios = {bb_cfg.ratio};
      bb_cfg.seed = seed;
      std::ostringstream rows, folds;
      bool first = true;
      for (const auto& prog : bb_programs) {
        const auto truth = resolve_program(prog);
        for (double ratio : bb_ratios) {
          bb_cfg.ratio = ratio;
          const auto r = boolbench(stem(prog), truth, bb_cfg);
          write_boolbench_row(rows, r, first);
          if (!bb_folds.empty()) {
            std::ostringstream f;
            write_folds_csv(f, r.cv);
            std::string body = f.str();
            if (!first) body = body.substr(body.find('\n') + 1);
            folds << body;
          }
          first = false;
        }
      }
      with_output(bb_out, [&](std::ostream& o) { o << rows.str(); });
      if (!bb_folds.empty()) with_output(bb_folds, [&](std::ostream& o) { o << folds.str(); });
    } else if (*cv) {
      const dataset d = read_data(cv_data);
      cv_cfg.postprocess = !cv_raw;
      apply_post(cv_cfg.post, cv_strategy, cv_no_retrain, cv_keep);
      const auto r = kfold_cv(d, cv_k, cv_repeats, make_pipeline(cv_cfg), seed, cv_threads);
      if (!cv_out.empty()) with_output(cv_out, [&](std::ostream& o) { write_folds_csv(o, r); });
      std::cout << "folds " << r.folds.size() << (r.stratified ? " stratified" : " unstratified") << " seed " << seed
                << '\n'
                << "f1 " << 100.0 * r.mean.f1 << " +- " << 100.0 * r.mean.f1_std << " accuracy "
                << 100.0 * r.mean.accuracy << " rules " << r.mean.rules << " rule_size " << r.mean.rule_size << '\n';
    } else if (*mg) {
      std::vector<nln_model> models;
      for (const auto& path : mg_models) models.push_back(load_model(path));
      const dataset d = read_data(mg_data, &models.front().schema);
      std::vector<stage_report> reports;
      nln_model m = merge_models(models, d, &reports);
      if (mg_max_rules > 0) {
        const auto search = find_minimal_subset(m, d, mg_max_rules, 1);
        if (search.ranked.empty()) throw precondition_error("merged model has no active rule");
        m = keep_rules(m, search.ranked.front().rules);
        fit_thresholds(m, d);
        std::cout << "subset " << search.ranked.front().rules.size() << " rules f1 "
                  << 100.0 * search.ranked.front().f1 << (search.approximate ? " (beam search)" : "") << '\n';
      }
      save_model(mg_out, m);
      if (!mg_report.empty()) with_output(mg_report, [&](std::ostream& o) { write_reports(o, reports); });
      const auto [rules, size] = model_size(m);
      print_metrics("merged", evaluate(m, d));
      std::cout << "rules " << rules << " mean_size " << size << '\n';
    } else if (*orc) {
      if (or_widths.empty()) or_widths = {2, 3, 4, 5, 6};
      or_cfg.seed = seed;
      std::ostringstream csv;
      for (std::size_t i = 0; i < or_widths.size(); ++i) {
        or_cfg.width = or_widths[i];
        std::ostringstream part;
        write_gap_csv(part, assumption_gap_experiment(or_cfg), or_cfg);
        std::string body = part.str();
        if (i) body = body.substr(body.find('\n') + 1);
        csv << body;
      }
      with_output(or_out, [&](std::ostream& o) { o << csv.str(); });
    }
  } catch (const nln::error& e) {
    std::cerr << "error [" << e.category() << "]: " << e.what() << '\n';
    return exit_failure;
  } catch (const std::exception& e) {
    std::cerr << "error [internal]: " << e.what() << '\n';
    return exit_failure;
  }
  return 0;
}
