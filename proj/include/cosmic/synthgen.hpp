#pragma once

#include <vector>

#include "cosmic/config.hpp"
#include "cosmic/rng.hpp"

namespace cosmic::synthgen {

enum class EventType { kStep, kGauss };

struct Event {
  double position = 0.0;   // continuous, in [0, T)
  double amplitude = 0.0;  // gauss: alpha_i; step: shared plateau height
  double width = 1.0;      // gauss only
};

/// Fully resolved parameters of one synthetic covariate.
struct SignalSpec {
  int length = 0;
  EventType type = EventType::kStep;
  std::vector<Event> events;
  /// Interior changepoint positions in (0, T); amplitudes has size + 2 entries
  /// (the knot at 0, one per changepoint, the knot at T).
  std::vector<double> changepoints;
  std::vector<double> trend_amplitudes;
};

/// Draws every random quantity of the generator.
SignalSpec sample_spec(int length, const SynthGenConfig& config, Rng& rng);

/// Event component only: alternating plateau (step) or summed Gaussian bumps.
std::vector<double> event_signal(const SignalSpec& spec);
/// Piecewise-linear trend through the ordered changepoint knots.
std::vector<double> trend_signal(const SignalSpec& spec);
/// event_signal + trend_signal.
std::vector<double> render(const SignalSpec& spec);

/// Samples and renders a covariate of the given length. Throws DomainError for
/// length < 2.
std::vector<double> generate_synthetic_covariate(int length, const SynthGenConfig& config, Rng& rng);

}  // namespace cosmic::synthgen
