#pragma once

#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

#include "cosmic/dataio.hpp"
#include "cosmic/preprocess.hpp"

namespace cosmic::baselines {

/// Raised when a model cannot handle the inputs it was given.
class CapabilityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// y_{T+i} = y_{T+i-S*ceil(i/S)}; falls back to S = 1 when the context is
/// shorter than one period.
QuantileForecast seasonal_naive(std::span<const double> context, int period, int horizon);

/// Any covariate-free forecaster of a sample's target.
using Forecaster = std::function<QuantileForecast(const TimeSeriesSample&)>;

/// Ridge regression of the target on its covariates over the context.
struct InContextLinearModel {
  /// Coefficients on the original covariate scale, one per covariate.
  std::vector<double> coefficients;
  double intercept = 0.0;
  double ridge_lambda = 1.0;
  /// Coefficients on standardized covariates (what the ridge penalty sees).
  std::vector<double> standardized_coefficients;
  std::vector<preprocess::ScalerState> covariate_scalers;
  preprocess::ScalerState target_scaler;

  /// ỹ_t for every t in [0, T+h) the covariates cover.
  std::vector<double> reconstruct(const TimeSeriesSample& sample) const;
};

/// Solves (XᵀX + λI)a = Xᵀ(y - ȳ) over the context, with covariates
/// z-standardized on their full known span (context plus horizon).
/// Throws CapabilityError for past-only covariates and DomainError when the
/// system is singular.
InContextLinearModel fit_in_context(const TimeSeriesSample& sample, double ridge_lambda);

/// Forecasts the context residuals y - ỹ with `base` and adds ỹ over the
/// horizon to every quantile row.
QuantileForecast in_context_forecast(const InContextLinearModel& model, const TimeSeriesSample& sample,
                                     const Forecaster& base);

/// Base forecaster wrapping seasonal_naive on the sample's own period.
Forecaster seasonal_naive_forecaster();

}  // namespace cosmic::baselines
