#include "cosmic/evaluation.hpp"

#include <algorithm>
#include <cmath>

namespace cosmic::evaluation {

double mase(std::span<const double> forecast_median, std::span<const double> truth, std::span<const double> context,
            int period) {
  if (forecast_median.size() != truth.size() || truth.empty()) {
    throw DomainError("mase: forecast and truth must have the same non-zero length");
  }
  if (period < 1 || context.size() <= static_cast<std::size_t>(period)) {
    throw DomainError("mase: context length must exceed the period");
  }
  double num = 0.0;
  for (std::size_t t = 0; t < truth.size(); ++t) num += std::abs(truth[t] - forecast_median[t]);
  num /= static_cast<double>(truth.size());
  const auto S = static_cast<std::size_t>(period);
  double den = 0.0;
  for (std::size_t t = 0; t + S < context.size(); ++t) den += std::abs(context[t + S] - context[t]);
  den /= static_cast<double>(context.size() - S);
  return num / std::max(den, kMaseFloor);
}

double wql(const QuantileForecast& forecast, std::span<const double> truth) {
  if (forecast.horizon() != truth.size()) throw DomainError("wql: forecast and truth lengths differ");
  double total = 0.0;
  std::size_t used = 0;
  for (std::size_t t = 0; t < truth.size(); ++t) {
    const double y = truth[t];
    if (std::abs(y) < kWqlZeroTruth) continue;
    ++used;
    double row = 0.0;
    for (std::size_t q = 0; q < kNumQuantiles; ++q) {
      const double level = kQuantileLevels[q];
      const double yhat = forecast.at(t, q);
      row += yhat <= y ? level * (y - yhat) : (1.0 - level) * (yhat - y);
    }
    total += row / std::abs(y);
  }
  if (used == 0) throw DomainError("wql undefined: every truth value is zero");
  return total / static_cast<double>(used * kNumQuantiles);
}

int roll_count(int n, int horizon, double rolling_fraction) {
  if (horizon < 1) throw DomainError("horizon must be >= 1");
  const int rolls = static_cast<int>(std::floor(rolling_fraction * n / horizon));
  return std::max(1, rolls);
}

RollingResult rolling_tasks(const TimeSeriesSample& sample, const std::vector<int>& horizon_periods,
                            double rolling_fraction) {
  RollingResult out;
  const int n = static_cast<int>(sample.target.size());
  const int S = sample.period;
  for (int periods : horizon_periods) {
    const int h = periods * S;
    if (n < h + S + 1) {
      out.warnings.push_back("sample '" + sample.id + "' skipped for horizon " + std::to_string(h) +
                             ": length " + std::to_string(n) + " < h + S + 1");
      continue;
    }
    int rolls = roll_count(n, h, rolling_fraction);
    // keep every origin's context longer than one period
    while (rolls > 1 && n - rolls * h <= S) --rolls;
    for (int r = rolls; r >= 1; --r) out.tasks.push_back({sample.id, n - r * h, h, S});
  }
  return out;
}

TimeSeriesSample task_sample(const TimeSeriesSample& series, const EvalTask& task) {
  const auto end = static_cast<std::size_t>(task.origin + task.horizon);
  if (task.origin < 1 || end > series.target.size()) throw DomainError("task outside series '" + series.id + "'");
  TimeSeriesSample s;
  s.id = series.id;
  s.context_length = task.origin;
  s.horizon = task.horizon;
  s.period = task.period;
  s.target.assign(series.target.begin(), series.target.begin() + static_cast<long>(end));
  if (!series.missing_mask.empty()) {
    s.missing_mask.assign(series.missing_mask.begin(), series.missing_mask.begin() + static_cast<long>(end));
  }
  for (const auto& c : series.covariates) {
    Covariate cc = c;
    const auto keep = c.kind == CovariateKind::kPastAndFuture ? end : static_cast<std::size_t>(task.origin);
    if (cc.values.size() < keep) throw DomainError("covariate '" + c.name + "' too short for task");
    cc.values.resize(keep);
    s.covariates.push_back(std::move(cc));
  }
  return s;
}

ScoreTable aggregate(const GroupScores& scores, const std::string& baseline) {
  ScoreTable table;
  table.baseline = baseline;
  table.raw = scores;
  std::map<std::string, double> log_sum;
  std::map<std::string, double> rank_sum;
  std::map<std::string, int> rank_groups;
  for (const auto& [group, models] : scores) {
    const auto base = models.find(baseline);
    if (base == models.end()) throw DomainError("baseline '" + baseline + "' missing in group '" + group + "'");
    for (const auto& [name, score] : models) {
      const double rel = score / base->second;
      auto& summary = table.models[name];
      if (!(rel > 0.0) || !std::isfinite(rel)) {
        table.warnings.push_back("model '" + name + "' group '" + group + "': non-positive relative score excluded");
        continue;
      }
      summary.relative[group] = rel;
      log_sum[name] += std::log(rel);
      ++summary.groups_used;
    }
    // ranks: 1 = best (lowest score); ties share the mean rank
    for (const auto& [name, score] : models) {
      int lower = 0, equal = 0;
      for (const auto& [other, other_score] : models) {
        if (other_score < score) ++lower;
        else if (other_score == score) ++equal;
      }
      rank_sum[name] += lower + (equal + 1) / 2.0;
      ++rank_groups[name];
    }
  }
  for (auto& [name, summary] : table.models) {
    summary.geometric_mean =
        summary.groups_used > 0 ? std::exp(log_sum[name] / summary.groups_used) : std::nan("");
    summary.average_rank = rank_sum[name] / rank_groups[name];
  }
  return table;
}

}  // namespace cosmic::evaluation
