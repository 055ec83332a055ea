#include "doctest.h"

#include <cmath>
#include <set>

#include "cosmic/dataio.hpp"
#include "cosmic/synthgen.hpp"

using namespace cosmic;
using namespace cosmic::synthgen;

TEST_CASE("single step event") {
  SignalSpec spec;
  spec.length = 10;
  spec.type = EventType::kStep;
  spec.events = {{4.0, 2.5, 1.0}};
  spec.trend_amplitudes = {0.0, 0.0};
  const auto x = render(spec);
  for (int t = 0; t < 10; ++t) CHECK(x[static_cast<std::size_t>(t)] == (t < 4 ? 0.0 : 2.5));
}

TEST_CASE("step events alternate at sorted positions") {
  SignalSpec spec;
  spec.length = 10;
  spec.type = EventType::kStep;
  spec.events = {{7.0, 1.0, 1.0}, {2.0, 1.0, 1.0}};
  const auto x = event_signal(spec);
  const std::vector<double> expected = {0, 0, 1, 1, 1, 1, 1, 0, 0, 0};
  CHECK(x == expected);
}

TEST_CASE("gauss event matches the closed form") {
  SignalSpec spec;
  spec.length = 50;
  spec.type = EventType::kGauss;
  spec.events = {{20.3, -1.7, 3.2}};
  spec.trend_amplitudes = {0.4, -0.2};
  const auto x = render(spec);
  const auto trend = trend_signal(spec);
  for (int t = 0; t < 50; ++t) {
    const double want = -1.7 * std::exp(-(t - 20.3) * (t - 20.3) / (2 * 3.2 * 3.2));
    CHECK(std::abs(x[static_cast<std::size_t>(t)] - trend[static_cast<std::size_t>(t)] - want) < 1e-12);
  }
}

TEST_CASE("trend interpolates through ordered knots") {
  SignalSpec spec;
  spec.length = 10;
  spec.changepoints = {5.0};
  spec.trend_amplitudes = {0.0, 5.0, 0.0};
  const auto x = trend_signal(spec);
  CHECK(x[0] == 0.0);
  CHECK(x[2] == doctest::Approx(2.0));
  CHECK(x[5] == doctest::Approx(5.0));
  CHECK(x[8] == doctest::Approx(2.0));

  spec.trend_amplitudes = {0.0, 0.0, 0.0};
  for (double v : trend_signal(spec)) CHECK(v == 0.0);
}

TEST_CASE("counts stay in range and event counts are uniform") {
  SynthGenConfig config;
  Rng rng(2024);
  std::vector<int> counts(21, 0);
  const int draws = 10000;
  for (int i = 0; i < draws; ++i) {
    const auto spec = sample_spec(64, config, rng);
    const auto ce = static_cast<int>(spec.events.size());
    const auto ccp = static_cast<int>(spec.changepoints.size());
    REQUIRE(ce >= 1);
    REQUIRE(ce <= 20);
    REQUIRE(ccp >= 0);
    REQUIRE(ccp <= 8);
    CHECK(spec.trend_amplitudes.size() == spec.changepoints.size() + 2);
    ++counts[static_cast<std::size_t>(ce)];
  }
  // chi-square against uniform on {1..20}, 19 degrees of freedom, alpha = 0.01
  const double expected = draws / 20.0;
  double chi2 = 0.0;
  for (int k = 1; k <= 20; ++k) chi2 += std::pow(counts[static_cast<std::size_t>(k)] - expected, 2) / expected;
  CHECK(chi2 < 36.191);
}

TEST_CASE("step signal has at most two levels and everything is finite") {
  SynthGenConfig config;
  Rng rng(5);
  for (int i = 0; i < 500; ++i) {
    const auto spec = sample_spec(100, config, rng);
    for (double v : render(spec)) REQUIRE(std::isfinite(v));
    if (spec.type == EventType::kStep) {
      const auto e = event_signal(spec);
      CHECK(std::set<double>(e.begin(), e.end()).size() <= 2);
    }
  }
}

TEST_CASE("determinism and domain") {
  SynthGenConfig config;
  Rng a(77), b(77);
  CHECK(generate_synthetic_covariate(40, config, a) == generate_synthetic_covariate(40, config, b));
  Rng c(1);
  CHECK_THROWS_AS(generate_synthetic_covariate(1, config, c), DomainError);
}
