#pragma once

#include <cmath>
#include <vector>

#include "cosmic/dataio.hpp"

namespace cosmic::oracle {

// Plain double-loop reimplementations of the metrics, written without the
// library's helpers.

inline double mase(const std::vector<double>& forecast, const std::vector<double>& truth,
                   const std::vector<double>& context, int period) {
  double num = 0.0;
  for (std::size_t t = 0; t < truth.size(); ++t) num += std::fabs(truth[t] - forecast[t]);
  num /= static_cast<double>(truth.size());
  double den = 0.0;
  int count = 0;
  for (std::size_t t = static_cast<std::size_t>(period); t < context.size(); ++t) {
    den += std::fabs(context[t] - context[t - static_cast<std::size_t>(period)]);
    ++count;
  }
  den /= count;
  if (den < 1e-10) den = 1e-10;
  return num / den;
}

inline double pinball(double q, double pred, double y) {
  if (y >= pred) return q * (y - pred);
  return (1.0 - q) * (pred - y);
}

inline double wql(const QuantileForecast& f, const std::vector<double>& truth) {
  double total = 0.0;
  int steps = 0;
  for (std::size_t t = 0; t < truth.size(); ++t) {
    if (std::fabs(truth[t]) < 1e-10) continue;
    ++steps;
    for (std::size_t q = 0; q < kNumQuantiles; ++q) {
      total += pinball(kQuantileLevels[q], f.at(t, q), truth[t]) / std::fabs(truth[t]);
    }
  }
  return total / (9.0 * steps);
}

}  // namespace cosmic::oracle
