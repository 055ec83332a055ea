#include "cosmic/rng.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace cosmic {

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

namespace {

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

Rng make_rng(std::uint64_t seed) { return Rng(mix64(seed)); }

Rng Rng::substream(std::string_view purpose) const {
  return Rng(mix64(seed_ ^ mix64(fnv1a(purpose))));
}

Rng Rng::substream(std::uint64_t index) const {
  return Rng(mix64(seed_ + mix64(index ^ 0x5851f42d4c957f2dULL)));
}

double Rng::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double Rng::uniform_open_low() {
  return static_cast<double>((engine_() >> 11) + 1) * 0x1.0p-53;
}

std::int64_t Rng::uniform_int(std::int64_t lo, std::int64_t hi) {
  const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
  if (span == 0) return static_cast<std::int64_t>(engine_());
  // Rejection sampling removes modulo bias.
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % span;
  std::uint64_t x = engine_();
  while (x >= limit) x = engine_();
  return lo + static_cast<std::int64_t>(x % span);
}

double Rng::normal() {
  // Box-Muller without caching the second variate keeps streams stateless.
  const double u1 = uniform_open_low();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::int64_t Rng::geometric0(double p) {
  if (p >= 1.0) return 0;
  const double u = uniform_open_low();
  const double k = std::floor(std::log(u) / std::log1p(-p));
  if (k > static_cast<double>(std::numeric_limits<std::int32_t>::max())) {
    return std::numeric_limits<std::int32_t>::max();
  }
  return static_cast<std::int64_t>(k);
}

}  // namespace cosmic
