#include "cosmic/train.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace cosmic::train {

namespace {

bool decays(const std::string& name) {
  if (name.find("norm") != std::string::npos) return false;
  return !(name.ends_with(".b1") || name.ends_with(".b2"));
}

/// Signs of y - yhat for every prediction entry; used to detect kink crossings.
std::vector<int> residual_signs(const ad::Matrix<double>& pred, const model::FutureTruth& truth) {
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(pred.size()));
  for (Eigen::Index t = 0; t < pred.rows(); ++t) {
    for (Eigen::Index q = 0; q < pred.cols(); ++q) {
      const double r = truth.values[static_cast<std::size_t>(t)] - pred(t, q);
      out.push_back(r > 0 ? 1 : (r < 0 ? -1 : 0));
    }
  }
  return out;
}

}  // namespace

double learning_rate_at(const TrainConfig& config, int step) {
  const int warmup = static_cast<int>(std::ceil(config.warmup_fraction * config.steps));
  if (step < warmup) return config.learning_rate * static_cast<double>(step + 1) / static_cast<double>(warmup);
  const int decay_steps = std::max(1, config.steps - warmup);
  const double progress = std::min(1.0, static_cast<double>(step - warmup) / static_cast<double>(decay_steps));
  return config.learning_rate * 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
}

TrainResult train(model::ModelParams params, const SampleSource& source, const ModelConfig& model_config,
                  const TrainConfig& config, Rng& rng, const TrainHooks& hooks) {
  config.validate();
  const std::size_t n = params.size();
  std::vector<ad::Matrix<float>> m(n), v(n);
  std::vector<bool> decay(n);
  for (std::size_t i = 0; i < n; ++i) {
    m[i] = ad::Matrix<float>::Zero(params[i].rows(), params[i].cols());
    v[i] = m[i];
    decay[i] = decays(params.name(i));
  }

  TrainResult result;
  result.loss_trace.reserve(static_cast<std::size_t>(config.steps));
  const Rng data_rng = rng.substream("train-data");
  for (int step = 0; step < config.steps; ++step) {
    Rng step_rng = data_rng.substream(static_cast<std::uint64_t>(step));
    ad::Tape<float> tape;
    model::Network<float> net(tape, params, model_config, true);
    std::vector<ad::Var> losses;
    losses.reserve(static_cast<std::size_t>(config.batch_size));
    for (int b = 0; b < config.batch_size; ++b) {
      Rng sample_rng = step_rng.substream(static_cast<std::uint64_t>(b));
      losses.push_back(model::sample_loss(net, tape, source(sample_rng), model_config));
    }
    const auto loss = tape.mean(losses);
    const double loss_value = tape.value(loss)(0, 0);
    if (!std::isfinite(loss_value)) {
      throw std::runtime_error("non-finite training loss at step " + std::to_string(step));
    }
    tape.backward(loss);

    double scale = 1.0;
    if (config.grad_clip > 0.0) {
      double sq = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const auto& g = tape.grad(net.param(i));
        if (g.size() != 0) sq += g.template cast<double>().squaredNorm();
      }
      const double norm = std::sqrt(sq);
      if (norm > config.grad_clip) scale = config.grad_clip / norm;
    }

    const double lr = learning_rate_at(config, step);
    const double bc1 = 1.0 - std::pow(config.beta1, step + 1);
    const double bc2 = 1.0 - std::pow(config.beta2, step + 1);
    const auto b1 = static_cast<float>(config.beta1);
    const auto b2 = static_cast<float>(config.beta2);
    for (std::size_t i = 0; i < n; ++i) {
      const auto& g_raw = tape.grad(net.param(i));
      ad::Matrix<float> g = g_raw.size() == 0 ? ad::Matrix<float>::Zero(params[i].rows(), params[i].cols())
                                              : ad::Matrix<float>(g_raw * static_cast<float>(scale));
      m[i] = b1 * m[i] + (1.0f - b1) * g;
      v[i] = b2 * v[i] + (1.0f - b2) * g.cwiseProduct(g);
      auto& p = params[i];
      for (Eigen::Index k = 0; k < p.size(); ++k) {
        const double mhat = m[i].data()[k] / bc1;
        const double vhat = v[i].data()[k] / bc2;
        double update = mhat / (std::sqrt(vhat) + config.adam_eps);
        if (decay[i]) update += config.weight_decay * p.data()[k];
        p.data()[k] = static_cast<float>(p.data()[k] - lr * update);
      }
    }
    result.loss_trace.push_back(loss_value);
    if (hooks.on_step) hooks.on_step(step, loss_value);
  }
  if (!params.all_finite()) throw std::runtime_error("training produced non-finite parameters");
  result.params = std::move(params);
  return result;
}

std::vector<ad::Matrix<double>> loss_gradient(const model::ParamStore<double>& params, const TimeSeriesSample& sample,
                                              const ModelConfig& config, double* loss) {
  ad::Tape<double> tape;
  model::Network<double> net(tape, params, config, true);
  const auto l = model::sample_loss(net, tape, sample, config);
  tape.backward(l);
  if (loss != nullptr) *loss = tape.value(l)(0, 0);
  std::vector<ad::Matrix<double>> grads;
  grads.reserve(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& g = tape.grad(net.param(i));
    grads.push_back(g.size() == 0 ? ad::Matrix<double>::Zero(params[i].rows(), params[i].cols()) : g);
  }
  return grads;
}

GradientCheckResult gradient_check(const model::ParamStore<double>& params, const TimeSeriesSample& sample,
                                   const ModelConfig& config, double epsilon, int num_entries, Rng& rng) {
  const auto grads = loss_gradient(params, sample, config);
  const auto input = model::tokenize(sample, config);
  const auto truth = model::normalized_future(sample, input.target_scaler);
  const auto base_signs = residual_signs(model::forward(params, input, config), truth);

  std::vector<std::pair<std::size_t, Eigen::Index>> entries;
  for (std::size_t i = 0; i < params.size(); ++i) {
    for (Eigen::Index k = 0; k < params[i].size(); ++k) entries.emplace_back(i, k);
  }

  auto perturbed = params;
  auto loss_at = [&](std::size_t i, Eigen::Index k, double value, std::vector<int>* signs) {
    const double saved = perturbed[i].data()[k];
    perturbed[i].data()[k] = value;
    const auto pred = model::forward(perturbed, input, config);
    perturbed[i].data()[k] = saved;
    *signs = residual_signs(pred, truth);
    return model::quantile_loss(pred, truth.values, truth.observed);
  };

  GradientCheckResult result;
  const auto target = std::min<std::size_t>(static_cast<std::size_t>(num_entries), entries.size());
  int attempts = 0;
  const int max_attempts = 20 * num_entries;
  while (static_cast<std::size_t>(result.checked) < target && attempts < max_attempts) {
    ++attempts;
    const auto [i, k] = entries[static_cast<std::size_t>(rng.uniform_int(0, static_cast<long>(entries.size()) - 1))];
    const double x = params[i].data()[k];
    std::vector<int> plus_signs, minus_signs;
    const double lp = loss_at(i, k, x + epsilon, &plus_signs);
    const double lm = loss_at(i, k, x - epsilon, &minus_signs);
    if (plus_signs != base_signs || minus_signs != base_signs) {
      ++result.skipped;
      continue;
    }
    const double numeric = (lp - lm) / (2.0 * epsilon);
    const double analytic = grads[i].data()[k];
    const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
    result.max_relative_error = std::max(result.max_relative_error, std::abs(analytic - numeric) / denom);
    ++result.checked;
  }
  return result;
}

}  // namespace cosmic::train
