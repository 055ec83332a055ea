#pragma once

#include <map>
#include <span>
#include <vector>

#include "cosmic/config.hpp"
#include "cosmic/dataio.hpp"
#include "cosmic/rng.hpp"

namespace cosmic::augment {

enum class GatedVariable { kTarget, kCovariate };
enum class Relation { kGreater, kLess };

/// Selects the timesteps where an impact function is active.
///
/// The rule (target, greater, 0) is the full-domain rule: every timestep is
/// active, including the running minimum that a strict comparison would drop.
struct ActiveSetRule {
  GatedVariable variable = GatedVariable::kTarget;
  Relation relation = Relation::kGreater;
  double quantile = 0.0;

  bool full_domain() const { return relation == Relation::kGreater && quantile == 0.0; }
  static ActiveSetRule everywhere() { return {}; }
};

/// Sparse lagged linear map from a covariate to an additive target impact.
struct ImpactFunction {
  double bias = 0.0;
  /// lag -> coefficient; lag 0 is contemporaneous.
  std::map<int, double> lag_coefficients;
  ActiveSetRule rule;
  double noise_scale = 0.0;

  bool is_zero() const;
  int max_lag() const { return lag_coefficients.empty() ? 0 : lag_coefficients.rbegin()->first; }
};

/// A covariate over t = 1..T+h with `history` extra leading values.
struct CovariateWindow {
  std::vector<double> values;
  int history = 0;

  /// Value at 0-based time t relative to the window start; zero before the
  /// stored history.
  double at(long t) const {
    const long i = t + history;
    return i >= 0 && i < static_cast<long>(values.size()) ? values[static_cast<std::size_t>(i)] : 0.0;
  }
  std::size_t length() const { return values.size() - static_cast<std::size_t>(history); }
};

/// k = min(kappa, k_max), kappa ~ Geom(p) on {0, 1, ...}.
int sample_covariate_count(const AugmentationConfig& config, Rng& rng);

/// Impact-function sampler; branch conditions follow the pseudocode literally.
ImpactFunction sample_impact_function(const AugmentationConfig& config, Rng& rng);

/// Nearest-rank empirical quantile (smallest value whose cumulative fraction
/// reaches q).
double nearest_rank_quantile(std::span<const double> values, double q);

/// Membership of every timestep in S = {t | z_t <> z_q}.
std::vector<bool> active_set(const ActiveSetRule& rule, std::span<const double> target,
                             std::span<const double> covariate);

/// Impact over t = 1..n where n = target.size(). Noise variance is
/// noise_scale * Var(deterministic impact over the active set).
std::vector<double> compute_impact(const ImpactFunction& f, std::span<const double> target,
                                   const CovariateWindow& covariate, Rng& rng);

/// Source of covariates for augmentation: windows of corpus series plus the
/// synthetic generator.
struct CovariatePool {
  std::vector<std::vector<double>> series;
};

struct AugmentedSample {
  TimeSeriesSample sample;
  /// Target before the impacts were added.
  std::vector<double> original;
  std::vector<ImpactFunction> impacts;
  std::vector<std::vector<bool>> active_sets;
};

/// Adds impacts of the given covariates to y. Each covariate must span y.
std::vector<double> apply_impacts(std::span<const double> y, const std::vector<CovariateWindow>& covariates,
                                  const std::vector<ImpactFunction>& impacts, Rng& rng,
                                  std::vector<std::vector<bool>>* active_sets = nullptr);

/// Draws one covariate: synthetic with probability synth_fraction, else a
/// z-normalized corpus window with up to max_lag history steps.
CovariateWindow sample_covariate(int length, const CovariatePool& pool, const AugmentationConfig& config,
                                 Rng& rng);

/// Informative covariate augmentation of one normalized target of length T+h.
///
/// When `informative` is false the covariates are drawn and attached the same
/// way but every impact function is zero, which gives the covariate-carrying
/// but uninformative control corpus.
AugmentedSample augment_sample(std::span<const double> y, int context_length, const CovariatePool& pool,
                               const AugmentationConfig& config, Rng& rng, bool informative = true);

}  // namespace cosmic::augment
