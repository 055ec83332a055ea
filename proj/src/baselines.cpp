#include "cosmic/baselines.hpp"

#include <Eigen/Dense>
#include <cmath>

namespace cosmic::baselines {

QuantileForecast seasonal_naive(std::span<const double> context, int period, int horizon) {
  if (context.empty()) throw DomainError("seasonal_naive needs a non-empty context");
  if (horizon < 1) throw DomainError("seasonal_naive needs horizon >= 1");
  const long T = static_cast<long>(context.size());
  const long S = period >= 1 && period <= T ? period : 1;
  std::vector<double> point(static_cast<std::size_t>(horizon));
  for (long i = 1; i <= horizon; ++i) {
    const long cycles = (i + S - 1) / S;
    point[static_cast<std::size_t>(i - 1)] = context[static_cast<std::size_t>(T + i - S * cycles - 1)];
  }
  return QuantileForecast::from_point(point);
}

Forecaster seasonal_naive_forecaster() {
  return [](const TimeSeriesSample& s) {
    return seasonal_naive(std::span<const double>(s.target.data(), static_cast<std::size_t>(s.context_length)),
                          s.period, s.horizon);
  };
}

InContextLinearModel fit_in_context(const TimeSeriesSample& sample, double ridge_lambda) {
  sample.validate();
  if (ridge_lambda < 0.0) throw DomainError("ridge_lambda must be >= 0");
  for (const auto& c : sample.covariates) {
    if (c.kind == CovariateKind::kPastOnly) {
      throw CapabilityError("in-context linear model cannot use past-only covariate '" + c.name + "' of sample '" +
                            sample.id + "'");
    }
  }
  const int T = sample.context_length;
  const auto k = static_cast<Eigen::Index>(sample.covariates.size());
  if (!sample.missing_mask.empty()) {
    for (int t = 0; t < T; ++t) {
      if (!sample.observed(static_cast<std::size_t>(t))) {
        throw CapabilityError("in-context linear model needs a fully observed context");
      }
    }
  }

  InContextLinearModel m;
  m.ridge_lambda = ridge_lambda;
  const std::span<const double> y(sample.target.data(), static_cast<std::size_t>(T));
  m.target_scaler = preprocess::fit_scaler(y);

  Eigen::MatrixXd X(T, k);
  for (Eigen::Index j = 0; j < k; ++j) {
    const auto& values = sample.covariates[static_cast<std::size_t>(j)].values;
    // known future values are part of the standardization span, so a covariate
    // that is nearly flat over the context cannot blow up over the horizon
    const auto known = std::min(values.size(), static_cast<std::size_t>(T + sample.horizon));
    const auto scaler = preprocess::fit_scaler(std::span<const double>(values.data(), known));
    m.covariate_scalers.push_back(scaler);
    for (int t = 0; t < T; ++t) X(t, j) = (values[static_cast<std::size_t>(t)] - scaler.mean) / scaler.std;
  }
  // center over the context so the intercept stays unpenalized
  const Eigen::RowVectorXd x_mean = k > 0 ? Eigen::RowVectorXd(X.colwise().mean()) : Eigen::RowVectorXd(0);
  X.rowwise() -= x_mean;
  Eigen::VectorXd yc(T);
  for (int t = 0; t < T; ++t) yc(t) = y[static_cast<std::size_t>(t)] - m.target_scaler.mean;

  Eigen::VectorXd a = Eigen::VectorXd::Zero(k);
  if (k > 0) {
    Eigen::MatrixXd A = X.transpose() * X;
    A.diagonal().array() += ridge_lambda;
    const Eigen::VectorXd rhs = X.transpose() * yc;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(A);
    const double scale = std::max(1.0, A.diagonal().cwiseAbs().maxCoeff());
    const double min_pivot = ldlt.vectorD().cwiseAbs().minCoeff();
    if (ldlt.info() != Eigen::Success || min_pivot <= 1e-12 * scale) {
      throw DomainError("ridge system is singular for sample '" + sample.id + "'; use ridge_lambda > 0");
    }
    a = ldlt.solve(rhs);
  }
  m.intercept = m.target_scaler.mean - (k > 0 ? x_mean.dot(a) : 0.0);
  for (Eigen::Index j = 0; j < k; ++j) {
    const auto& s = m.covariate_scalers[static_cast<std::size_t>(j)];
    m.standardized_coefficients.push_back(a(j));
    m.coefficients.push_back(a(j) / s.std);
  }
  return m;
}

std::vector<double> InContextLinearModel::reconstruct(const TimeSeriesSample& sample) const {
  if (sample.covariates.size() != coefficients.size()) {
    throw DomainError("covariate count differs from the fitted model");
  }
  std::size_t n = sample.target.size();
  for (const auto& c : sample.covariates) n = std::min(n, c.values.size());
  std::vector<double> out(n, intercept);
  for (std::size_t j = 0; j < coefficients.size(); ++j) {
    const auto& s = covariate_scalers[j];
    const auto& values = sample.covariates[j].values;
    for (std::size_t t = 0; t < n; ++t) out[t] += standardized_coefficients[j] * (values[t] - s.mean) / s.std;
  }
  return out;
}

QuantileForecast in_context_forecast(const InContextLinearModel& model, const TimeSeriesSample& sample,
                                     const Forecaster& base) {
  const auto T = static_cast<std::size_t>(sample.context_length);
  const auto h = static_cast<std::size_t>(sample.horizon);
  auto recon = model.reconstruct(sample);
  if (recon.size() < T + h) throw DomainError("covariates do not cover the horizon of sample '" + sample.id + "'");

  TimeSeriesSample residual;
  residual.id = sample.id;
  residual.context_length = sample.context_length;
  residual.horizon = sample.horizon;
  residual.period = sample.period;
  residual.missing_mask = sample.missing_mask;
  residual.target.resize(sample.target.size());
  for (std::size_t t = 0; t < residual.target.size(); ++t) {
    residual.target[t] = t < recon.size() ? sample.target[t] - recon[t] : 0.0;
  }

  auto f = base(residual);
  if (f.horizon() != h) throw DomainError("base forecaster returned the wrong horizon");
  for (std::size_t t = 0; t < h; ++t) {
    for (auto& v : f.row(t)) v += recon[T + t];
  }
  return f;
}

}  // namespace cosmic::baselines
