#include "cosmic/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cosmic/dataio.hpp"

namespace cosmic::synthgen {

SignalSpec sample_spec(int length, const SynthGenConfig& config, Rng& rng) {
  if (length < 2) throw DomainError("synthetic covariate length must be >= 2");
  config.validate();
  SignalSpec spec;
  spec.length = length;
  const double T = static_cast<double>(length);

  const auto n_events = rng.uniform_int(1, config.max_events);
  std::vector<double> positions(static_cast<std::size_t>(n_events));
  for (auto& p : positions) p = rng.uniform(0.0, T);
  spec.type = rng.bernoulli(0.5) ? EventType::kStep : EventType::kGauss;

  if (spec.type == EventType::kStep) {
    const double amplitude = rng.normal(0.0, config.amplitude_std);
    std::sort(positions.begin(), positions.end());
    for (double p : positions) spec.events.push_back({p, amplitude, 1.0});
  } else {
    for (double p : positions) {
      Event e;
      e.position = p;
      e.amplitude = rng.normal(0.0, config.amplitude_std);
      e.width = rng.uniform(config.bell_width_min * T, config.bell_width_max * T);
      spec.events.push_back(e);
    }
  }

  const auto n_cp = rng.uniform_int(0, config.max_changepoints);
  spec.changepoints.resize(static_cast<std::size_t>(n_cp));
  for (auto& c : spec.changepoints) c = rng.uniform(0.0, T);
  spec.trend_amplitudes.resize(spec.changepoints.size() + 2);
  for (auto& a : spec.trend_amplitudes) a = rng.normal(0.0, config.changepoint_std);
  return spec;
}

std::vector<double> event_signal(const SignalSpec& spec) {
  std::vector<double> x(static_cast<std::size_t>(spec.length), 0.0);
  if (spec.type == EventType::kStep) {
    std::vector<Event> sorted = spec.events;
    std::sort(sorted.begin(), sorted.end(),
              [](const Event& a, const Event& b) { return a.position < b.position; });
    for (std::size_t t = 0; t < x.size(); ++t) {
      const auto passed = std::count_if(sorted.begin(), sorted.end(), [&](const Event& e) {
        return static_cast<double>(t) >= e.position;
      });
      // Odd number of crossed events -> on the plateau.
      if (passed % 2 == 1) x[t] = sorted.front().amplitude;
    }
  } else {
    for (const auto& e : spec.events) {
      const double inv = 1.0 / (2.0 * e.width * e.width);
      for (std::size_t t = 0; t < x.size(); ++t) {
        const double d = static_cast<double>(t) - e.position;
        x[t] += e.amplitude * std::exp(-d * d * inv);
      }
    }
  }
  return x;
}

std::vector<double> trend_signal(const SignalSpec& spec) {
  std::vector<double> x(static_cast<std::size_t>(spec.length), 0.0);
  if (spec.trend_amplitudes.empty()) return x;
  // Knots: (0, a_0), (pi_(1), a_1), ..., (T, a_last), ordered by position.
  std::vector<std::pair<double, double>> knots;
  knots.emplace_back(0.0, spec.trend_amplitudes.front());
  std::vector<double> cps = spec.changepoints;
  std::sort(cps.begin(), cps.end());
  for (std::size_t i = 0; i < cps.size(); ++i) knots.emplace_back(cps[i], spec.trend_amplitudes[i + 1]);
  knots.emplace_back(static_cast<double>(spec.length), spec.trend_amplitudes.back());

  std::size_t k = 0;
  for (std::size_t t = 0; t < x.size(); ++t) {
    const double tt = static_cast<double>(t);
    while (k + 2 < knots.size() && knots[k + 1].first <= tt) ++k;
    const auto& [x0, y0] = knots[k];
    const auto& [x1, y1] = knots[k + 1];
    const double span = x1 - x0;
    x[t] = span > 0.0 ? y0 + (y1 - y0) * (tt - x0) / span : y1;
  }
  return x;
}

std::vector<double> render(const SignalSpec& spec) {
  auto x = event_signal(spec);
  const auto trend = trend_signal(spec);
  for (std::size_t t = 0; t < x.size(); ++t) x[t] += trend[t];
  return x;
}

std::vector<double> generate_synthetic_covariate(int length, const SynthGenConfig& config, Rng& rng) {
  return render(sample_spec(length, config, rng));
}

}  // namespace cosmic::synthgen
