#include "cosmic/experiments.hpp"

#include <cmath>
#include <iomanip>
#include <numbers>
#include <sstream>

#include "json.hpp"

#include "cosmic/baselines.hpp"
#include "cosmic/evaluation.hpp"
#include "cosmic/preprocess.hpp"

namespace cosmic::experiments {

namespace {

void emit(const Logger& log, const std::string& msg) {
  if (log) log(msg);
}

std::string format_number(double x) {
  std::ostringstream ss;
  ss << std::setprecision(10) << x;
  return ss.str();
}

std::span<const double> context_of(const TimeSeriesSample& s) {
  return {s.target.data(), static_cast<std::size_t>(s.context_length)};
}

std::span<const double> future_of(const TimeSeriesSample& s) {
  return {s.target.data() + s.context_length, static_cast<std::size_t>(s.horizon)};
}

double bell(double t, double center, double width) {
  const double z = (t - center) / width;
  return std::exp(-0.5 * z * z);
}

}  // namespace

std::vector<double> generate_base_series(int length, const ExperimentConfig& config, Rng& rng) {
  if (length < 1) throw DomainError("base series length must be >= 1");
  std::vector<double> y(static_cast<std::size_t>(length), 0.0);
  const auto n_waves = rng.uniform_int(1, 2);
  for (std::int64_t k = 0; k < n_waves; ++k) {
    const double period = rng.uniform(8.0, 64.0);
    const double amplitude = rng.uniform(0.5, 2.0);
    const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
    for (int t = 0; t < length; ++t) {
      y[static_cast<std::size_t>(t)] += amplitude * std::sin(2.0 * std::numbers::pi * t / period + phase);
    }
  }
  const double slope = rng.normal(0.0, 0.005);
  const double phi = rng.uniform(0.0, 0.8);
  double ar = 0.0;
  for (int t = 0; t < length; ++t) {
    ar = phi * ar + rng.normal(0.0, config.base_noise);
    y[static_cast<std::size_t>(t)] += slope * (t - length / 2.0) + ar;
  }
  return y;
}

std::vector<std::vector<double>> generate_base_corpus(const ExperimentConfig& config, Rng& rng) {
  std::vector<std::vector<double>> corpus;
  corpus.reserve(static_cast<std::size_t>(config.corpus_size));
  for (int i = 0; i < config.corpus_size; ++i) {
    Rng series_rng = rng.substream(static_cast<std::uint64_t>(i));
    corpus.push_back(generate_base_series(config.base_length, config, series_rng));
  }
  return corpus;
}

train::SampleSource make_training_source(const std::vector<std::vector<double>>& corpus, const Config& config,
                                         bool informative) {
  const int T = config.train.context_length;
  const int n = T + config.train.horizon;
  for (const auto& s : corpus) {
    if (static_cast<int>(s.size()) < n) throw ConfigError("training corpus series shorter than context + horizon");
  }
  if (corpus.empty()) throw ConfigError("empty training corpus");
  auto pool = std::make_shared<augment::CovariatePool>();
  pool->series = corpus;
  const auto augment_config = config.augment;
  return [&corpus, pool, augment_config, T, n, informative](Rng& rng) {
    const auto& series = corpus[static_cast<std::size_t>(
        rng.uniform_int(0, static_cast<std::int64_t>(corpus.size()) - 1))];
    const auto start = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(series.size()) - n));
    const std::span<const double> window(series.data() + start, static_cast<std::size_t>(n));
    const auto scaler = preprocess::fit_scaler(window.first(static_cast<std::size_t>(T)));
    const auto y = preprocess::normalize(window, scaler);
    auto aug = augment::augment_sample(y, T, *pool, augment_config, rng, informative);
    return std::move(aug.sample);
  };
}

TimeSeriesSample make_event_sample(const ExperimentConfig& config, const EventSampleSpec& spec, Rng& rng,
                                   const std::string& id) {
  if (spec.n_covariates < 1 || spec.context_events < 0) throw DomainError("invalid event sample spec");
  const int T = config.context_length;
  const int h = config.horizon;
  const int n = T + h;
  Rng base_rng = rng.substream("base");
  Rng event_rng = rng.substream("events");
  Rng impact_rng = rng.substream("impact");

  TimeSeriesSample s;
  s.id = id;
  s.context_length = T;
  s.horizon = h;
  s.period = 1;
  s.target = generate_base_series(n, config, base_rng);
  for (auto& v : s.target) v += config.level;

  const auto forced = spec.force_horizon_event ? event_rng.uniform_int(0, spec.n_covariates - 1) : -1;
  for (int i = 0; i < spec.n_covariates; ++i) {
    std::vector<double> x(static_cast<std::size_t>(n), 0.0);
    auto add_event = [&](double lo, double hi) {
      const double center = event_rng.uniform(lo, hi);
      const double width = event_rng.uniform(config.bell_width_min, config.bell_width_max);
      for (int t = 0; t < n; ++t) x[static_cast<std::size_t>(t)] += config.bell_amplitude * bell(t, center, width);
    };
    for (int e = 0; e < spec.context_events; ++e) add_event(0.0, T);
    const bool horizon_event =
        spec.force_horizon_event ? i == forced : event_rng.bernoulli(1.0 / spec.n_covariates);
    if (horizon_event) add_event(T, n);

    const double magnitude = impact_rng.uniform(config.impact_min, config.impact_max);
    const double coefficient = impact_rng.bernoulli(0.5) ? magnitude : -magnitude;
    const int lag = config.lag_mode == "geometric"
                        ? static_cast<int>(std::min<std::int64_t>(impact_rng.geometric0(config.lag_geometric_p), n))
                        : 0;
    for (int t = lag; t < n; ++t) {
      s.target[static_cast<std::size_t>(t)] += coefficient * x[static_cast<std::size_t>(t - lag)];
    }
    s.covariates.push_back({"event_" + std::to_string(i), CovariateKind::kPastAndFuture, std::move(x)});
  }
  return s;
}

model::ModelParams train_model(const Config& config, const std::vector<std::vector<double>>& corpus,
                               bool informative, std::uint64_t seed, const Logger& log,
                               std::vector<double>* loss_trace) {
  const Rng root = make_rng(seed);
  Rng init_rng = root.substream("init");
  Rng train_rng = root.substream("train");
  model::InitOptions options;
  options.embedding_std = config.train.init_std;
  auto params = model::init_params(config.model, init_rng, options);
  const auto source = make_training_source(corpus, config, informative);
  const std::string tag = informative ? "augmented" : "unaugmented";
  train::TrainHooks hooks;
  const int every = std::max(1, config.train.steps / 20);
  hooks.on_step = [&](int step, double loss) {
    if ((step + 1) % every == 0 || step == 0) {
      emit(log, tag + " step " + std::to_string(step + 1) + "/" + std::to_string(config.train.steps) +
                    " loss " + format_number(loss));
    }
  };
  auto result = train::train(std::move(params), source, config.model, config.train, train_rng, hooks);
  if (loss_trace != nullptr) *loss_trace = result.loss_trace;
  return std::move(result.params);
}

double AblationReport::score(const std::string& model, const std::string& inference) const {
  for (const auto& c : cells) {
    if (c.model == model && c.inference == inference) return c.wql;
  }
  throw std::out_of_range("no ablation cell " + model + "/" + inference);
}

AblationReport run_ablation(const Config& config, std::uint64_t seed, const Logger& log) {
  config.validate();
  AblationReport report;
  report.seed = seed;
  report.config = config;
  const Rng root = make_rng(seed);

  Rng corpus_rng = root.substream("corpus");
  const auto corpus = generate_base_corpus(config.experiment, corpus_rng);

  std::vector<TimeSeriesSample> eval;
  const Rng eval_rng = root.substream("ablation-eval");
  const auto& counts = config.experiment.covariate_counts;
  for (int i = 0; i < config.experiment.eval_samples; ++i) {
    Rng sample_rng = eval_rng.substream(static_cast<std::uint64_t>(i));
    EventSampleSpec spec;
    spec.n_covariates = counts[static_cast<std::size_t>(i) % counts.size()];
    spec.context_events = config.experiment.ablation_events;
    spec.force_horizon_event = true;
    eval.push_back(make_event_sample(config.experiment, spec, sample_rng, "eval/" + std::to_string(i)));
  }

  const std::uint64_t train_seed = root.substream("train-seed").next_u64();
  for (const bool informative : {true, false}) {
    const std::string name = informative ? "augmented" : "unaugmented";
    emit(log, "training " + name + " model");
    std::vector<double> trace;
    auto params = train_model(config, corpus, informative, train_seed, log, &trace);
    for (const bool use_cov : {true, false}) {
      double wql_sum = 0.0, mase_sum = 0.0;
      for (const auto& s : eval) {
        const auto f = model::predict(params, s, config.model, use_cov);
        wql_sum += evaluation::wql(f, future_of(s));
        const auto median = f.median();
        mase_sum += evaluation::mase(median, future_of(s), context_of(s), s.period);
      }
      const auto count = static_cast<double>(eval.size());
      report.cells.push_back({name, use_cov ? "covariates" : "no-covariates", wql_sum / count, mase_sum / count});
      emit(log, name + " / " + report.cells.back().inference + ": wql " + format_number(report.cells.back().wql));
    }
    report.loss_traces[name] = std::move(trace);
    report.models.emplace(name, std::move(params));
  }
  return report;
}

double SensitivityReport::mean_advantage(const std::string& model, int event_count) const {
  double sum = 0.0;
  int n = 0;
  for (const auto& c : cells) {
    if (c.model == model && c.event_count == event_count) {
      sum += c.advantage;
      ++n;
    }
  }
  if (n == 0) throw std::out_of_range("no sensitivity cells for " + model);
  return sum / n;
}

SensitivityReport run_impact_sensitivity(const Config& config, std::uint64_t seed, const model::ModelParams* trained,
                                         const Logger& log) {
  config.validate();
  SensitivityReport report;
  report.seed = seed;
  report.config = config;
  const Rng root = make_rng(seed);

  model::ModelParams own;
  if (trained == nullptr) {
    Rng corpus_rng = root.substream("corpus");
    const auto corpus = generate_base_corpus(config.experiment, corpus_rng);
    emit(log, "training augmented model");
    own = train_model(config, corpus, true, root.substream("train-seed").next_u64(), log);
    trained = &own;
  }
  const auto& params = *trained;
  const baselines::Forecaster base = [&](const TimeSeriesSample& s) {
    return model::predict(params, s, config.model, false);
  };

  const Rng cells_rng = root.substream("sensitivity");
  for (int events : config.experiment.event_counts) {
    for (int n_cov : config.experiment.covariate_counts) {
      Rng cell_rng = cells_rng.substream("cell/" + std::to_string(events) + "/" + std::to_string(n_cov));
      double cosmic_cov = 0.0, no_cov = 0.0, ridge = 0.0;
      for (int i = 0; i < config.experiment.eval_samples; ++i) {
        Rng sample_rng = cell_rng.substream(static_cast<std::uint64_t>(i));
        const auto s = make_event_sample(config.experiment, {n_cov, events, false}, sample_rng,
                                         "sens/" + std::to_string(events) + "/" + std::to_string(n_cov) + "/" +
                                             std::to_string(i));
        const auto truth = future_of(s);
        cosmic_cov += evaluation::wql(model::predict(params, s, config.model, true), truth);
        no_cov += evaluation::wql(base(s), truth);
        const auto fit = baselines::fit_in_context(s, config.eval.ridge_lambda);
        ridge += evaluation::wql(baselines::in_context_forecast(fit, s, base), truth);
      }
      const double count = config.experiment.eval_samples;
      cosmic_cov /= count;
      no_cov /= count;
      ridge /= count;
      report.cells.push_back({events, n_cov, "cosmic", cosmic_cov, no_cov, 1.0 - cosmic_cov / no_cov});
      report.cells.push_back({events, n_cov, "ridge-ctx", ridge, no_cov, 1.0 - ridge / no_cov});
      emit(log, "events " + std::to_string(events) + " covariates " + std::to_string(n_cov) + ": cosmic " +
                    format_number(cosmic_cov) + " ridge " + format_number(ridge) + " no-cov " +
                    format_number(no_cov));
    }
  }
  return report;
}

std::string to_json(const AblationReport& report) {
  nlohmann::ordered_json j;
  j["experiment"] = "ablation";
  j["seed"] = report.seed;
  j["config"] = render_config(report.config);
  auto& cells = j["cells"] = nlohmann::ordered_json::array();
  for (const auto& c : report.cells) {
    cells.push_back({{"model", c.model}, {"inference", c.inference}, {"wql", c.wql}, {"mase", c.mase}});
  }
  auto& traces = j["final_loss"] = nlohmann::ordered_json::object();
  for (const auto& [name, trace] : report.loss_traces) traces[name] = trace.empty() ? 0.0 : trace.back();
  return j.dump(2) + "\n";
}

std::string to_csv(const AblationReport& report) {
  std::string out = "model,inference,wql,mase\n";
  for (const auto& c : report.cells) {
    out += c.model + "," + c.inference + "," + format_number(c.wql) + "," + format_number(c.mase) + "\n";
  }
  return out;
}

std::string to_json(const SensitivityReport& report) {
  nlohmann::ordered_json j;
  j["experiment"] = "impact-sensitivity";
  j["seed"] = report.seed;
  j["config"] = render_config(report.config);
  auto& cells = j["cells"] = nlohmann::ordered_json::array();
  for (const auto& c : report.cells) {
    cells.push_back({{"event_count", c.event_count},
                     {"n_covariates", c.n_covariates},
                     {"model", c.model},
                     {"wql_covariates", c.wql_covariates},
                     {"wql_no_covariates", c.wql_no_covariates},
                     {"advantage", c.advantage}});
  }
  return j.dump(2) + "\n";
}

std::string to_csv(const SensitivityReport& report) {
  std::string out = "event_count,n_covariates,model,wql_covariates,wql_no_covariates,advantage\n";
  for (const auto& c : report.cells) {
    out += std::to_string(c.event_count) + "," + std::to_string(c.n_covariates) + "," + c.model + "," +
           format_number(c.wql_covariates) + "," + format_number(c.wql_no_covariates) + "," +
           format_number(c.advantage) + "\n";
  }
  return out;
}

}  // namespace cosmic::experiments
