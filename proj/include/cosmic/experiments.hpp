#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cosmic/augment.hpp"
#include "cosmic/config.hpp"
#include "cosmic/dataio.hpp"
#include "cosmic/model.hpp"
#include "cosmic/rng.hpp"
#include "cosmic/train.hpp"

namespace cosmic::experiments {

using Logger = std::function<void(const std::string&)>;

/// Sinusoids plus a small trend and AR(1) noise, centred at zero.
std::vector<double> generate_base_series(int length, const ExperimentConfig& config, Rng& rng);

/// Unlabelled base series used as training targets and as the covariate pool.
std::vector<std::vector<double>> generate_base_corpus(const ExperimentConfig& config, Rng& rng);

/// Training samples: a random window of a corpus series, normalized on its
/// context, then passed through covariate augmentation. With
/// `informative == false` the covariates are attached with zero impact.
train::SampleSource make_training_source(const std::vector<std::vector<double>>& corpus, const Config& config,
                                         bool informative);

struct EventSampleSpec {
  int n_covariates = 1;
  int context_events = 1;
  /// true: exactly one covariate gets a horizon event. false: each covariate
  /// gets one with probability 1 / n_covariates.
  bool force_horizon_event = false;
};

/// Base series plus `level` with additive deterministic impacts a_i * x_{i,t-lag}
/// of Bell-event covariates. Lags are 0 (fixed0) or Geom(p) (geometric).
TimeSeriesSample make_event_sample(const ExperimentConfig& config, const EventSampleSpec& spec, Rng& rng,
                                   const std::string& id);

/// Trains one model on the synthetic corpus. Both variants of the ablation use
/// the same seed, so they differ only in the impacts.
model::ModelParams train_model(const Config& config, const std::vector<std::vector<double>>& corpus,
                               bool informative, std::uint64_t seed, const Logger& log = {},
                               std::vector<double>* loss_trace = nullptr);

struct AblationCell {
  std::string model;      // augmented | unaugmented
  std::string inference;  // covariates | no-covariates
  double wql = 0.0;
  double mase = 0.0;
};

struct AblationReport {
  std::uint64_t seed = 0;
  Config config;
  std::vector<AblationCell> cells;
  std::map<std::string, std::vector<double>> loss_traces;
  /// Trained models, kept for reuse (not serialized).
  std::map<std::string, model::ModelParams> models;

  double score(const std::string& model, const std::string& inference) const;
};

AblationReport run_ablation(const Config& config, std::uint64_t seed, const Logger& log = {});

struct SensitivityCell {
  int event_count = 0;
  int n_covariates = 0;
  std::string model;  // cosmic | ridge-ctx
  double wql_covariates = 0.0;
  double wql_no_covariates = 0.0;
  /// 1 - wql_covariates / wql_no_covariates.
  double advantage = 0.0;
};

struct SensitivityReport {
  std::uint64_t seed = 0;
  Config config;
  std::vector<SensitivityCell> cells;

  /// Advantage of a model for one event count, averaged over covariate counts.
  double mean_advantage(const std::string& model, int event_count) const;
};

/// Scores the covariate-aware model and the in-context ridge model (with the
/// model's covariate-free forecast as residual forecaster) on event samples.
/// Trains an augmented model first unless one is supplied.
SensitivityReport run_impact_sensitivity(const Config& config, std::uint64_t seed,
                                         const model::ModelParams* trained = nullptr, const Logger& log = {});

/// JSON and CSV renderings; both embed or accompany the resolved config.
std::string to_json(const AblationReport& report);
std::string to_csv(const AblationReport& report);
std::string to_json(const SensitivityReport& report);
std::string to_csv(const SensitivityReport& report);

}  // namespace cosmic::experiments
