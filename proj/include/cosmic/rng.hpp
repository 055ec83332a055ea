#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace cosmic {

/// Seeded random source with portable draws.
///
/// Only the raw 64-bit engine comes from the standard library; every
/// distribution is computed here so that a seed yields the same stream on any
/// standard library implementation.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed), seed_(seed) {}

  /// Derives an independent stream keyed by a purpose string.
  Rng substream(std::string_view purpose) const;
  /// Derives an independent stream keyed by an index (e.g. a sample number).
  Rng substream(std::uint64_t index) const;
  /// Seed used to construct this stream.
  std::uint64_t seed() const { return seed_; }

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform on [0, 1).
  double uniform();
  /// Uniform on (0, 1].
  double uniform_open_low();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer on the closed interval [lo, hi].
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);
  bool bernoulli(double p) { return uniform() < p; }
  double normal();
  double normal(double mean, double stddev) { return mean + stddev * normal(); }
  /// Number of failures before the first success, support {0, 1, 2, ...}.
  std::int64_t geometric0(double p);
  /// Number of trials up to and including the first success, support {1, 2, ...}.
  std::int64_t geometric1(double p) { return 1 + geometric0(p); }

 private:
  std::mt19937_64 engine_;
  std::uint64_t seed_ = 0;
};

/// Root stream for a user supplied seed.
Rng make_rng(std::uint64_t seed);

/// SplitMix64 finalizer, used for seed derivation.
std::uint64_t mix64(std::uint64_t x);

}  // namespace cosmic
