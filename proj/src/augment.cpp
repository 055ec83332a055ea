#include "cosmic/augment.hpp"

#include <algorithm>
#include <cmath>

#include "cosmic/preprocess.hpp"
#include "cosmic/synthgen.hpp"

namespace cosmic::augment {

bool ImpactFunction::is_zero() const {
  if (bias != 0.0) return false;
  return std::all_of(lag_coefficients.begin(), lag_coefficients.end(),
                     [](const auto& kv) { return kv.second == 0.0; });
}

int sample_covariate_count(const AugmentationConfig& config, Rng& rng) {
  const auto kappa = rng.geometric0(config.p);
  return static_cast<int>(std::min<std::int64_t>(kappa, config.k_max));
}

ImpactFunction sample_impact_function(const AugmentationConfig& config, Rng& rng) {
  ImpactFunction f;
  f.noise_scale = config.noise_scale;
  if (!(rng.uniform() > config.p_fo)) return f;  // no impact, full-domain rule

  const auto lag_count = rng.geometric1(config.p_lagcount);
  for (std::int64_t i = 0; i < lag_count; ++i) {
    const auto lag = static_cast<int>(std::min<std::int64_t>(rng.geometric0(config.p_lagpos), config.max_lag));
    f.lag_coefficients[lag] = rng.normal();
  }
  if (rng.uniform() > config.p_pw) {
    f.bias = rng.normal();
    f.rule.variable = rng.bernoulli(0.5) ? GatedVariable::kTarget : GatedVariable::kCovariate;
    f.rule.relation = rng.bernoulli(0.5) ? Relation::kGreater : Relation::kLess;
    f.rule.quantile = rng.uniform();
  }
  return f;
}

double nearest_rank_quantile(std::span<const double> values, double q) {
  if (values.empty()) throw DomainError("quantile of an empty sequence");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const auto n = static_cast<double>(sorted.size());
  auto rank = static_cast<long>(std::ceil(q * n)) - 1;
  rank = std::clamp<long>(rank, 0, static_cast<long>(sorted.size()) - 1);
  return sorted[static_cast<std::size_t>(rank)];
}

std::vector<bool> active_set(const ActiveSetRule& rule, std::span<const double> target,
                             std::span<const double> covariate) {
  const std::size_t n = target.size();
  if (rule.full_domain()) return std::vector<bool>(n, true);
  if (rule.variable == GatedVariable::kCovariate && covariate.size() < n) {
    throw DomainError("covariate shorter than target in active_set");
  }
  const auto z = rule.variable == GatedVariable::kTarget ? target : covariate.first(n);
  const double threshold = nearest_rank_quantile(z, rule.quantile);
  std::vector<bool> active(n);
  for (std::size_t t = 0; t < n; ++t) {
    active[t] = rule.relation == Relation::kGreater ? z[t] > threshold : z[t] < threshold;
  }
  return active;
}

namespace {

std::vector<double> visible_part(const CovariateWindow& w, std::size_t n) {
  std::vector<double> out(n);
  for (std::size_t t = 0; t < n; ++t) out[t] = w.at(static_cast<long>(t));
  return out;
}

}  // namespace

std::vector<double> compute_impact(const ImpactFunction& f, std::span<const double> target,
                                   const CovariateWindow& covariate, Rng& rng) {
  const std::size_t n = target.size();
  std::vector<double> impact(n, 0.0);
  if (f.is_zero()) return impact;

  const auto x = visible_part(covariate, n);
  const auto active = active_set(f.rule, target, x);
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t t = 0; t < n; ++t) {
    if (!active[t]) continue;
    double v = f.bias;
    for (const auto& [lag, a] : f.lag_coefficients) v += a * covariate.at(static_cast<long>(t) - lag);
    impact[t] = v;
    sum += v;
    ++count;
  }
  if (count == 0 || f.noise_scale <= 0.0) return impact;

  const double mean = sum / static_cast<double>(count);
  double var = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    if (active[t]) var += (impact[t] - mean) * (impact[t] - mean);
  }
  var /= static_cast<double>(count);
  if (var <= 0.0) return impact;
  const double noise_std = std::sqrt(f.noise_scale * var);
  for (std::size_t t = 0; t < n; ++t) {
    if (active[t]) impact[t] += rng.normal(0.0, noise_std);
  }
  return impact;
}

std::vector<double> apply_impacts(std::span<const double> y, const std::vector<CovariateWindow>& covariates,
                                  const std::vector<ImpactFunction>& impacts, Rng& rng,
                                  std::vector<std::vector<bool>>* active_sets) {
  if (covariates.size() != impacts.size()) throw DomainError("one impact function per covariate required");
  std::vector<double> out(y.begin(), y.end());
  for (std::size_t i = 0; i < covariates.size(); ++i) {
    if (covariates[i].length() < y.size()) throw DomainError("covariate does not span the target");
    // Every impact sees the unaugmented target.
    const auto impact = compute_impact(impacts[i], y, covariates[i], rng);
    for (std::size_t t = 0; t < out.size(); ++t) out[t] += impact[t];
    if (active_sets) {
      if (impacts[i].is_zero()) {
        active_sets->emplace_back(y.size(), false);
      } else {
        active_sets->push_back(active_set(impacts[i].rule, y, visible_part(covariates[i], y.size())));
      }
    }
  }
  return out;
}

CovariateWindow sample_covariate(int length, const CovariatePool& pool, const AugmentationConfig& config,
                                 Rng& rng) {
  const bool synthetic = rng.uniform() < config.synth_fraction;
  CovariateWindow w;
  if (synthetic) {
    auto x = synthgen::generate_synthetic_covariate(std::max(length, 2), config.synth, rng);
    x.resize(static_cast<std::size_t>(length));
    const auto scaler = preprocess::fit_scaler(x);
    w.values = preprocess::normalize(x, scaler);
    return w;
  }
  std::vector<std::size_t> eligible;
  for (std::size_t i = 0; i < pool.series.size(); ++i) {
    if (pool.series[i].size() >= static_cast<std::size_t>(length)) eligible.push_back(i);
  }
  if (eligible.empty()) {
    throw ConfigError("covariate pool has no series of length >= " + std::to_string(length) +
                      " and synth_fraction < 1");
  }
  const auto& s = pool.series[eligible[static_cast<std::size_t>(
      rng.uniform_int(0, static_cast<std::int64_t>(eligible.size()) - 1))]];
  const auto last_start = static_cast<std::int64_t>(s.size()) - length;
  const auto start = static_cast<std::size_t>(rng.uniform_int(0, last_start));
  const auto history = std::min<std::size_t>(start, static_cast<std::size_t>(config.max_lag));
  const std::span<const double> visible(s.data() + start, static_cast<std::size_t>(length));
  const auto scaler = preprocess::fit_scaler(visible);
  w.history = static_cast<int>(history);
  w.values = preprocess::normalize(std::span<const double>(s.data() + start - history, history + visible.size()),
                                   scaler);
  return w;
}

AugmentedSample augment_sample(std::span<const double> y, int context_length, const CovariatePool& pool,
                               const AugmentationConfig& config, Rng& rng, bool informative) {
  config.validate();
  const auto n = static_cast<int>(y.size());
  if (context_length < 1 || context_length >= n) {
    throw DomainError("context_length must lie in [1, len(y) - 1]");
  }
  const std::uint64_t key = rng.next_u64();
  const Rng root(key);
  Rng count_rng = root.substream("count");
  Rng cov_rng = root.substream("covariates");
  Rng impact_rng = root.substream("impacts");
  Rng noise_rng = root.substream("noise");
  Rng kind_rng = root.substream("kind");

  const int k = sample_covariate_count(config, count_rng);
  std::vector<CovariateWindow> covariates;
  std::vector<ImpactFunction> impacts;
  for (int i = 0; i < k; ++i) covariates.push_back(sample_covariate(n, pool, config, cov_rng));
  for (int i = 0; i < k; ++i) {
    auto f = sample_impact_function(config, impact_rng);
    if (!informative) {
      f = ImpactFunction{};
      f.noise_scale = config.noise_scale;
    }
    impacts.push_back(std::move(f));
  }

  AugmentedSample out;
  out.original.assign(y.begin(), y.end());
  out.sample.target = apply_impacts(y, covariates, impacts, noise_rng, &out.active_sets);
  out.sample.context_length = context_length;
  out.sample.horizon = n - context_length;
  out.sample.period = 1;
  for (int i = 0; i < k; ++i) {
    Covariate c;
    c.name = "cov_" + std::to_string(i);
    c.values = visible_part(covariates[static_cast<std::size_t>(i)], static_cast<std::size_t>(n));
    if (kind_rng.uniform() < config.past_only_prob) {
      c.kind = CovariateKind::kPastOnly;
      c.values.resize(static_cast<std::size_t>(context_length));
    }
    out.sample.covariates.push_back(std::move(c));
  }
  out.impacts = std::move(impacts);
  return out;
}

}  // namespace cosmic::augment
