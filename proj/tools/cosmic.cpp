// Command line entry point: generate, augment, train, forecast, evaluate,
// experiment and check-grad. Outputs go to files; logs go to stderr.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "cosmic/augment.hpp"
#include "cosmic/baselines.hpp"
#include "cosmic/checkpoint.hpp"
#include "cosmic/config.hpp"
#include "cosmic/dataio.hpp"
#include "cosmic/evaluation.hpp"
#include "cosmic/experiments.hpp"
#include "cosmic/model.hpp"
#include "cosmic/preprocess.hpp"
#include "cosmic/synthgen.hpp"
#include "cosmic/train.hpp"

namespace {

using namespace cosmic;
using json = nlohmann::ordered_json;

void log_line(const std::string& msg) { std::cerr << "[cosmic] " << msg << "\n"; }

Config resolve_config(const std::string& path) { return path.empty() ? Config{} : load_config(path); }

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write '" + path + "'");
  out << text;
  if (!out) throw ValidationError("failed writing '" + path + "'");
}

// ---- generate ---------------------------------------------------------------

struct GenerateArgs {
  std::string out, config, kind = "event";
  std::uint64_t seed = 0;
  int count = 100;
  int covariates = 1;
  int events = 4;
};

void run_generate(const GenerateArgs& a) {
  const auto config = resolve_config(a.config);
  const auto& ex = config.experiment;
  const Rng root = make_rng(a.seed);
  std::vector<TimeSeriesSample> out;
  for (int i = 0; i < a.count; ++i) {
    Rng rng = root.substream(static_cast<std::uint64_t>(i));
    TimeSeriesSample s;
    if (a.kind == "event") {
      s = experiments::make_event_sample(ex, {a.covariates, a.events, false}, rng,
                                         "event/" + std::to_string(i));
    } else {
      const int n = ex.context_length + ex.horizon;
      s.id = a.kind + "/" + std::to_string(i);
      s.context_length = ex.context_length;
      s.horizon = ex.horizon;
      if (a.kind == "base") {
        s.target = experiments::generate_base_series(n, ex, rng);
        for (auto& v : s.target) v += ex.level;
      } else {
        s.target = synthgen::generate_synthetic_covariate(n, config.augment.synth, rng);
      }
    }
    out.push_back(std::move(s));
  }
  save_corpus(out, a.out);
  log_line("wrote " + std::to_string(out.size()) + " samples to " + a.out);
}

// ---- augment ----------------------------------------------------------------

struct AugmentArgs {
  std::string corpus, out, config;
  std::uint64_t seed = 0;
  int samples = 100;
};

void run_augment(const AugmentArgs& a) {
  const auto config = resolve_config(a.config);
  const auto corpus = load_corpus(a.corpus);
  if (corpus.empty()) throw ValidationError("corpus '" + a.corpus + "' is empty");
  augment::CovariatePool pool;
  for (const auto& s : corpus) pool.series.push_back(s.target);
  const Rng root = make_rng(a.seed);
  std::vector<TimeSeriesSample> out;
  for (int i = 0; i < a.samples; ++i) {
    Rng rng = root.substream(static_cast<std::uint64_t>(i));
    const auto& src = corpus[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(corpus.size()) - 1))];
    const auto n = static_cast<std::size_t>(src.context_length + src.horizon);
    const std::span<const double> window(src.target.data(), n);
    const auto scaler = preprocess::fit_scaler(window.first(static_cast<std::size_t>(src.context_length)));
    const auto y = preprocess::normalize(window, scaler);
    auto aug = augment::augment_sample(y, src.context_length, pool, config.augment, rng);
    aug.sample.id = src.id + "/aug" + std::to_string(i);
    aug.sample.period = src.period;
    out.push_back(std::move(aug.sample));
  }
  save_corpus(out, a.out);
  log_line("wrote " + std::to_string(out.size()) + " augmented samples to " + a.out);
}

// ---- train ------------------------------------------------------------------

struct TrainArgs {
  std::string corpus, config, out;
  std::uint64_t seed = 0;
  bool no_augment = false;
  int steps = -1;
};

void run_train(const TrainArgs& a) {
  auto config = resolve_config(a.config);
  if (a.steps >= 0) config.train.steps = a.steps;
  if (a.no_augment) config.train.augment = false;
  config.validate();
  std::vector<std::vector<double>> corpus;
  if (!a.corpus.empty()) {
    for (const auto& s : load_corpus(a.corpus)) corpus.push_back(s.target);
  } else {
    Rng corpus_rng = make_rng(a.seed).substream("corpus");
    corpus = experiments::generate_base_corpus(config.experiment, corpus_rng);
  }
  const auto params = experiments::train_model(config, corpus, config.train.augment, a.seed, log_line);
  save_checkpoint(a.out, {config, params});
  log_line("saved model (" + std::to_string(params.num_values()) + " parameters) to " + a.out);
}

// ---- forecast ---------------------------------------------------------------

struct ForecastArgs {
  std::string model, corpus, method = "cosmic", out, config;
  std::uint64_t seed = 0;
  std::vector<int> rolling_periods;
};

void run_forecast(const ForecastArgs& a) {
  std::optional<Checkpoint> ckpt;
  if (!a.model.empty()) ckpt = load_checkpoint(a.model);
  if ((a.method == "cosmic" || a.method == "cosmic-nocov") && !ckpt) {
    throw ValidationError("method '" + a.method + "' needs --model");
  }
  const Config config = ckpt ? ckpt->config : resolve_config(a.config);
  baselines::Forecaster nocov = baselines::seasonal_naive_forecaster();
  if (ckpt) {
    nocov = [&](const TimeSeriesSample& s) { return model::predict(ckpt->params, s, config.model, false); };
  }

  std::function<QuantileForecast(const TimeSeriesSample&)> forecaster;
  if (a.method == "cosmic") {
    forecaster = [&](const TimeSeriesSample& s) { return model::predict(ckpt->params, s, config.model, true); };
  } else if (a.method == "cosmic-nocov") {
    forecaster = nocov;
  } else if (a.method == "seasonal-naive") {
    forecaster = baselines::seasonal_naive_forecaster();
  } else if (a.method == "ridge-ctx") {
    forecaster = [&](const TimeSeriesSample& s) {
      return baselines::in_context_forecast(baselines::fit_in_context(s, config.eval.ridge_lambda), s, nocov);
    };
  } else {
    throw ValidationError("unknown method '" + a.method + "'");
  }

  std::vector<ForecastRecord> records;
  for (const auto& series : load_corpus(a.corpus)) {
    std::vector<evaluation::EvalTask> tasks;
    if (a.rolling_periods.empty()) {
      tasks.push_back({series.id, series.context_length, series.horizon, series.period});
    } else {
      auto rolled = evaluation::rolling_tasks(series, a.rolling_periods, config.eval.rolling_fraction);
      for (const auto& w : rolled.warnings) log_line("warning: " + w);
      tasks = std::move(rolled.tasks);
    }
    for (const auto& task : tasks) {
      records.push_back({series.id, task.origin, forecaster(evaluation::task_sample(series, task))});
    }
  }
  save_forecasts(records, a.out);
  log_line("wrote " + std::to_string(records.size()) + " forecasts to " + a.out);
}

// ---- evaluate ---------------------------------------------------------------

struct EvaluateArgs {
  std::string corpus, out, baseline = "seasonal-naive";
  std::vector<std::string> forecasts;
  std::uint64_t seed = 0;
};

std::string group_of(const std::string& id) {
  const auto slash = id.find('/');
  return slash == std::string::npos ? "default" : id.substr(0, slash);
}

json table_json(const evaluation::ScoreTable& t) {
  json j;
  j["baseline"] = t.baseline;
  j["raw"] = t.raw;
  json models = json::object();
  for (const auto& [name, m] : t.models) {
    models[name] = {{"relative", m.relative},
                    {"geometric_mean", m.geometric_mean},
                    {"average_rank", m.average_rank},
                    {"groups_used", m.groups_used}};
  }
  j["models"] = models;
  j["warnings"] = t.warnings;
  return j;
}

void run_evaluate(const EvaluateArgs& a) {
  std::map<std::string, TimeSeriesSample> by_id;
  for (auto& s : load_corpus(a.corpus)) by_id.emplace(s.id, std::move(s));

  evaluation::GroupScores mase_scores, wql_scores;
  std::map<std::string, std::map<std::string, int>> counts;
  json tasks = json::array();
  for (const auto& spec : a.forecasts) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos || eq == 0) throw ValidationError("--forecasts expects name=path, got '" + spec + "'");
    const auto name = spec.substr(0, eq);
    for (const auto& rec : load_forecasts(spec.substr(eq + 1))) {
      const auto it = by_id.find(rec.sample_id);
      if (it == by_id.end()) throw ValidationError("forecast for unknown sample '" + rec.sample_id + "'");
      const auto& s = it->second;
      const auto h = rec.forecast.horizon();
      if (rec.origin < 1 || static_cast<std::size_t>(rec.origin) + h > s.target.size()) {
        throw ValidationError("forecast for '" + rec.sample_id + "' exceeds the series");
      }
      const std::span<const double> context(s.target.data(), static_cast<std::size_t>(rec.origin));
      const std::span<const double> truth(s.target.data() + rec.origin, h);
      const double m = evaluation::mase(rec.forecast.median(), truth, context, s.period);
      const double w = evaluation::wql(rec.forecast, truth);
      const auto group = group_of(rec.sample_id);
      mase_scores[group][name] += m;
      wql_scores[group][name] += w;
      ++counts[group][name];
      tasks.push_back({{"model", name}, {"sample_id", rec.sample_id}, {"origin", rec.origin}, {"mase", m}, {"wql", w}});
    }
  }
  for (auto* scores : {&mase_scores, &wql_scores}) {
    for (auto& [group, models] : *scores) {
      for (auto& [name, v] : models) v /= counts[group][name];
    }
  }
  json j;
  j["mase"] = table_json(evaluation::aggregate(mase_scores, a.baseline));
  j["wql"] = table_json(evaluation::aggregate(wql_scores, a.baseline));
  j["tasks"] = tasks;
  write_text(a.out, j.dump(2) + "\n");
  log_line("wrote scores for " + std::to_string(tasks.size()) + " tasks to " + a.out);
}

// ---- experiment -------------------------------------------------------------

struct ExperimentArgs {
  std::string which, config, out, csv;
  std::uint64_t seed = 0;
};

void run_experiment(const ExperimentArgs& a) {
  const auto config = resolve_config(a.config);
  std::string json_text, csv_text;
  if (a.which == "ablation") {
    const auto report = experiments::run_ablation(config, a.seed, log_line);
    json_text = experiments::to_json(report);
    csv_text = experiments::to_csv(report);
  } else {
    const auto report = experiments::run_impact_sensitivity(config, a.seed, nullptr, log_line);
    json_text = experiments::to_json(report);
    csv_text = experiments::to_csv(report);
  }
  write_text(a.out, json_text);
  if (!a.csv.empty()) write_text(a.csv, csv_text);
  log_line("wrote " + a.out);
}

// ---- check-grad -------------------------------------------------------------

struct CheckGradArgs {
  std::string config;
  std::uint64_t seed = 0;
  int entries = 200;
  double epsilon = 1e-5;
};

int run_check_grad(const CheckGradArgs& a) {
  const auto config = resolve_config(a.config);
  const Rng root = make_rng(a.seed);
  Rng init_rng = root.substream("init");
  model::InitOptions options;
  options.embedding_std = config.train.init_std;
  const auto params = model::init_params(config.model, init_rng, options).cast<double>();
  Rng sample_rng = root.substream("sample");
  const auto sample = experiments::make_event_sample(config.experiment, {1, 2, true}, sample_rng, "grad/0");
  Rng pick_rng = root.substream("entries");
  const auto r = train::gradient_check(params, sample, config.model, a.epsilon, a.entries, pick_rng);
  std::printf("parameters %zu checked %d skipped %d max_relative_error %.6e\n", params.num_values(), r.checked,
              r.skipped, r.max_relative_error);
  return r.max_relative_error < 1e-4 && r.checked > 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"COSMIC covariate-aware forecasting toolkit"};
  app.require_subcommand(1);

  GenerateArgs gen;
  auto* g = app.add_subcommand("generate", "Write a synthetic corpus");
  g->add_option("--out", gen.out, "Output corpus (JSON lines)")->required();
  g->add_option("--seed", gen.seed, "Random seed")->required();
  g->add_option("--count", gen.count, "Number of samples")->check(CLI::PositiveNumber);
  g->add_option("--kind", gen.kind, "event | base | covariate")
      ->check(CLI::IsMember({"event", "base", "covariate"}));
  g->add_option("--covariates", gen.covariates, "Covariates per event sample")->check(CLI::PositiveNumber);
  g->add_option("--events", gen.events, "Context events per covariate")->check(CLI::NonNegativeNumber);
  g->add_option("--config", gen.config, "Config file");

  AugmentArgs aug;
  auto* au = app.add_subcommand("augment", "Apply covariate augmentation to a corpus");
  au->add_option("--corpus", aug.corpus, "Input corpus")->required();
  au->add_option("--out", aug.out, "Output corpus")->required();
  au->add_option("--seed", aug.seed, "Random seed")->required();
  au->add_option("--samples", aug.samples, "Number of augmented samples")->check(CLI::PositiveNumber);
  au->add_option("--config", aug.config, "Config file");

  TrainArgs tr;
  auto* t = app.add_subcommand("train", "Train a model and write a checkpoint");
  t->add_option("--corpus", tr.corpus, "Training corpus (default: synthetic)");
  t->add_option("--config", tr.config, "Config file");
  t->add_option("--out", tr.out, "Checkpoint path")->required();
  t->add_option("--seed", tr.seed, "Random seed")->required();
  t->add_flag("--no-augment", tr.no_augment, "Attach covariates with zero impact");
  t->add_option("--steps", tr.steps, "Override train.steps")->check(CLI::NonNegativeNumber);

  ForecastArgs fc;
  auto* f = app.add_subcommand("forecast", "Forecast every sample of a corpus");
  f->add_option("--model", fc.model, "Checkpoint");
  f->add_option("--corpus", fc.corpus, "Corpus")->required();
  f->add_option("--method", fc.method, "Forecasting method")
      ->check(CLI::IsMember({"cosmic", "cosmic-nocov", "seasonal-naive", "ridge-ctx"}));
  f->add_option("--out", fc.out, "Output forecasts")->required();
  f->add_option("--seed", fc.seed, "Random seed")->required();
  f->add_option("--rolling-periods", fc.rolling_periods, "Rolling evaluation horizons in periods");
  f->add_option("--config", fc.config, "Config file when no model is given");

  EvaluateArgs ev;
  auto* e = app.add_subcommand("evaluate", "Score forecasts against a corpus");
  e->add_option("--corpus", ev.corpus, "Corpus with truth")->required();
  e->add_option("--forecasts", ev.forecasts, "name=path, repeatable")->required();
  e->add_option("--baseline", ev.baseline, "Baseline model name");
  e->add_option("--out", ev.out, "Output scores.json")->required();
  e->add_option("--seed", ev.seed, "Random seed (unused; accepted for uniformity)");

  ExperimentArgs ex;
  auto* x = app.add_subcommand("experiment", "Run a scripted experiment");
  x->add_option("which", ex.which, "ablation | impact-sensitivity")
      ->required()
      ->check(CLI::IsMember({"ablation", "impact-sensitivity"}));
  x->add_option("--config", ex.config, "Config file");
  x->add_option("--seed", ex.seed, "Random seed")->required();
  x->add_option("--out", ex.out, "Report JSON")->required();
  x->add_option("--csv", ex.csv, "Flat CSV report");

  CheckGradArgs cg;
  auto* c = app.add_subcommand("check-grad", "Compare analytic and numeric gradients");
  c->add_option("--config", cg.config, "Config file (use a tiny model)");
  c->add_option("--seed", cg.seed, "Random seed")->required();
  c->add_option("--entries", cg.entries, "Parameters to check")->check(CLI::PositiveNumber);
  c->add_option("--epsilon", cg.epsilon, "Finite-difference step")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*g) run_generate(gen);
    else if (*au) run_augment(aug);
    else if (*t) run_train(tr);
    else if (*f) run_forecast(fc);
    else if (*e) run_evaluate(ev);
    else if (*x) run_experiment(ex);
    else if (*c) return run_check_grad(cg);
    return 0;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 1;
  }
}
