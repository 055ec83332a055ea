#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "cosmic/dataio.hpp"

namespace cosmic::evaluation {

inline constexpr double kMaseFloor = 1e-10;
inline constexpr double kWqlZeroTruth = 1e-10;

/// Mean absolute error over the horizon divided by the in-sample mean
/// absolute seasonal difference of the context (floored).
double mase(std::span<const double> forecast_median, std::span<const double> truth, std::span<const double> context,
            int period);

/// Scaled quantile loss averaged over levels and timesteps; timesteps with
/// |y| < 1e-10 are excluded. Throws DomainError if all are excluded.
double wql(const QuantileForecast& forecast, std::span<const double> truth);

struct EvalTask {
  std::string sample_id;
  int origin = 0;
  int horizon = 1;
  int period = 1;
};

struct RollingResult {
  std::vector<EvalTask> tasks;
  /// One message per (sample, horizon) combination that was skipped.
  std::vector<std::string> warnings;
};

/// Number of rolls for a series of length n and horizon h.
int roll_count(int n, int horizon, double rolling_fraction = 0.1);

/// End-aligned rolling origins with stride h over the last fraction of the series.
RollingResult rolling_tasks(const TimeSeriesSample& sample, const std::vector<int>& horizon_periods,
                            double rolling_fraction = 0.1);

/// Context/truth split of a full series at a task's origin.
TimeSeriesSample task_sample(const TimeSeriesSample& series, const EvalTask& task);

/// group -> model -> mean score for one metric.
using GroupScores = std::map<std::string, std::map<std::string, double>>;

struct ModelSummary {
  std::map<std::string, double> relative;  // per group
  double geometric_mean = 0.0;
  double average_rank = 0.0;
  int groups_used = 0;
};

struct ScoreTable {
  std::string baseline;
  GroupScores raw;
  std::map<std::string, ModelSummary> models;
  std::vector<std::string> warnings;
};

/// Relative scores against the baseline, their geometric mean over groups and
/// the average rank (ties share the mean rank).
ScoreTable aggregate(const GroupScores& scores, const std::string& baseline);

}  // namespace cosmic::evaluation
