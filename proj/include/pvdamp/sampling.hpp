#pragma once

#include <cstdint>

#include "pvdamp/core.hpp"

namespace pvdamp {

enum class SamplingLayout {
  points,   // every k-space location drawn independently
  columns,  // one draw per phase-encode column, readout fully sampled
};

struct DensityConfig {
  double acceleration = 5.0;       // target R
  int calib_rows = 8;              // fully sampled central block
  int calib_cols = 8;
  double decay_exponent = 4.0;     // p = c (1 - r)^d outside the block
  double p_min = 1e-3;
  SamplingLayout layout = SamplingLayout::points;
};

/// Sampling probabilities in centered k-space coordinates.
struct DensityMap {
  RealImage p;
  int calib_rows = 0;
  int calib_cols = 0;
  double target_acceleration = 1.0;
  SamplingLayout layout = SamplingLayout::points;

  double expected_samples() const;
  bool in_calibration(int r, int c) const;
};

struct SamplingMask {
  RealImage m;  // 0 or 1
  std::uint64_t seed = 0;

  std::size_t sampled() const;
};

/// Builds p_j = clamp(c (1 - r_j)^d, p_min, 1) with r_j the infinity-norm distance
/// from the k-space centre normalized to 1 at the border, forces the calibration
/// block to 1, and bisects c so that sum(p) = N / R to within 1e-6 relative.
/// R == 1 gives p == 1. Throws ValidationError for an infeasible R, quoting the
/// feasible range.
DensityMap make_density(int rows, int cols, const DensityConfig& cfg);

/// Independent Bernoulli(p_j) draws (per column in column layout) from a seeded
/// mt19937_64. Deterministic in (density, seed).
SamplingMask draw_mask(const DensityMap& density, std::uint64_t seed);

/// N / #sampled.
double realized_acceleration(const SamplingMask& mask);

}  // namespace pvdamp
