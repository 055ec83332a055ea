#pragma once

#include <span>
#include <vector>

namespace cosmic::preprocess {

/// Instance-normalization statistics of one series.
struct ScalerState {
  double mean = 0.0;
  double std = 1.0;  // population std, floored; constant series -> 1
};

inline constexpr double kStdFloor = 1e-10;

/// Mean/std over observed entries. `mask` may be empty (all observed).
/// Throws DomainError when nothing is observed.
ScalerState fit_scaler(std::span<const double> values, const std::vector<bool>& mask = {});

std::vector<double> normalize(std::span<const double> values, const ScalerState& scaler);
std::vector<double> denormalize(std::span<const double> values, const ScalerState& scaler);

/// Non-overlapping windows of a left-padded series.
struct PatchGrid {
  int patch_length = 1;
  int num_patches = 0;
  int padding = 0;              // leading masked positions
  std::vector<double> values;   // num_patches x patch_length, row-major
  std::vector<bool> mask;       // true = observed
  std::vector<int> time_index;  // 0-based patch index, left to right

  double value(int patch, int i) const { return values[static_cast<std::size_t>(patch * patch_length + i)]; }
  bool observed(int patch, int i) const { return mask[static_cast<std::size_t>(patch * patch_length + i)]; }
};

/// Left-pads with masked zeros to a multiple of m_in and splits into patches.
/// Masked input positions are stored as 0.
PatchGrid patchify(std::span<const double> values, const std::vector<bool>& mask, int m_in);

/// Concatenates patches and drops the leading padding.
std::vector<double> unpatchify(const PatchGrid& grid);

}  // namespace cosmic::preprocess
