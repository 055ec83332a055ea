#pragma once

#include <functional>
#include <vector>

#include "cosmic/config.hpp"
#include "cosmic/dataio.hpp"
#include "cosmic/model.hpp"
#include "cosmic/rng.hpp"

namespace cosmic::train {

/// Produces one training sample per call from the given stream.
using SampleSource = std::function<TimeSeriesSample(Rng&)>;

/// Learning rate at a 0-based step: linear warmup, then cosine decay to 0.
double learning_rate_at(const TrainConfig& config, int step);

struct TrainResult {
  model::ModelParams params;
  std::vector<double> loss_trace;  // mean batch loss per step
};

struct TrainHooks {
  /// Called after each step with (step, loss); may be empty.
  std::function<void(int, double)> on_step;
};

/// AdamW on the mean quantile loss of each batch. Throws std::runtime_error
/// naming the step if the loss becomes non-finite.
TrainResult train(model::ModelParams params, const SampleSource& source, const ModelConfig& model_config,
                  const TrainConfig& config, Rng& rng, const TrainHooks& hooks = {});

/// Analytic gradient of the sample loss for every parameter, in double precision.
std::vector<ad::Matrix<double>> loss_gradient(const model::ParamStore<double>& params, const TimeSeriesSample& sample,
                                              const ModelConfig& config, double* loss = nullptr);

struct GradientCheckResult {
  double max_relative_error = 0.0;
  int checked = 0;
  /// Entries skipped because the perturbation crossed a pinball kink.
  int skipped = 0;
};

/// Compares analytic and central-difference gradients on randomly chosen
/// parameter entries. Relative error is |a - n| / max(|a|, |n|, 1e-6).
GradientCheckResult gradient_check(const model::ParamStore<double>& params, const TimeSeriesSample& sample,
                                   const ModelConfig& config, double epsilon, int num_entries, Rng& rng);

}  // namespace cosmic::train
