#include "cosmic/preprocess.hpp"

#include <cmath>

#include "cosmic/dataio.hpp"

namespace cosmic::preprocess {

ScalerState fit_scaler(std::span<const double> values, const std::vector<bool>& mask) {
  if (!mask.empty() && mask.size() != values.size()) throw DomainError("mask length differs from values");
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t t = 0; t < values.size(); ++t) {
    if (mask.empty() || mask[t]) {
      sum += values[t];
      ++n;
    }
  }
  if (n == 0) throw DomainError("cannot fit a scaler without observed values");
  ScalerState s;
  s.mean = sum / static_cast<double>(n);
  double ss = 0.0;
  for (std::size_t t = 0; t < values.size(); ++t) {
    if (mask.empty() || mask[t]) ss += (values[t] - s.mean) * (values[t] - s.mean);
  }
  const double std = std::sqrt(ss / static_cast<double>(n));
  s.std = std > kStdFloor ? std : 1.0;
  return s;
}

std::vector<double> normalize(std::span<const double> values, const ScalerState& scaler) {
  std::vector<double> out(values.size());
  for (std::size_t t = 0; t < values.size(); ++t) out[t] = (values[t] - scaler.mean) / scaler.std;
  return out;
}

std::vector<double> denormalize(std::span<const double> values, const ScalerState& scaler) {
  std::vector<double> out(values.size());
  for (std::size_t t = 0; t < values.size(); ++t) out[t] = values[t] * scaler.std + scaler.mean;
  return out;
}

PatchGrid patchify(std::span<const double> values, const std::vector<bool>& mask, int m_in) {
  if (m_in < 1) throw DomainError("patch length must be >= 1");
  if (!mask.empty() && mask.size() != values.size()) throw DomainError("mask length differs from values");
  PatchGrid g;
  g.patch_length = m_in;
  const auto n = static_cast<int>(values.size());
  g.num_patches = (n + m_in - 1) / m_in;
  g.padding = g.num_patches * m_in - n;
  const auto total = static_cast<std::size_t>(g.num_patches * m_in);
  g.values.assign(total, 0.0);
  g.mask.assign(total, false);
  for (int t = 0; t < n; ++t) {
    const auto dst = static_cast<std::size_t>(g.padding + t);
    const bool obs = mask.empty() || mask[static_cast<std::size_t>(t)];
    g.mask[dst] = obs;
    g.values[dst] = obs ? values[static_cast<std::size_t>(t)] : 0.0;
  }
  g.time_index.resize(static_cast<std::size_t>(g.num_patches));
  for (int p = 0; p < g.num_patches; ++p) g.time_index[static_cast<std::size_t>(p)] = p;
  return g;
}

std::vector<double> unpatchify(const PatchGrid& grid) {
  return {grid.values.begin() + grid.padding, grid.values.end()};
}

}  // namespace cosmic::preprocess
