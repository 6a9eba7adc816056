#include "pvdamp/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

namespace pvdamp {

double DensityMap::expected_samples() const {
  double s = 0.0;
  for (double v : p.values()) s += v;
  return s;
}

bool DensityMap::in_calibration(int r, int c) const {
  const int rows = p.rows(), cols = p.cols();
  const bool col_in = c >= cols / 2 - calib_cols / 2 && c < cols / 2 - calib_cols / 2 + calib_cols;
  if (layout == SamplingLayout::columns) return col_in;
  const bool row_in = r >= rows / 2 - calib_rows / 2 && r < rows / 2 - calib_rows / 2 + calib_rows;
  return row_in && col_in;
}

std::size_t SamplingMask::sampled() const {
  std::size_t n = 0;
  for (double v : m.values()) n += v != 0.0;
  return n;
}

namespace {

// Radial profile (1 - r)^d for every location, -1 inside the calibration block.
RealImage profile(const DensityMap& shell, double exponent) {
  const int rows = shell.p.rows(), cols = shell.p.cols();
  RealImage prof(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      if (shell.in_calibration(r, c)) {
        prof(r, c) = -1.0;
        continue;
      }
      const double dc = std::abs(c - cols / 2) / (cols / 2.0);
      const double dr = shell.layout == SamplingLayout::columns ? 0.0 : std::abs(r - rows / 2) / (rows / 2.0);
      prof(r, c) = std::pow(1.0 - std::max(dr, dc), exponent);
    }
  return prof;
}

void fill(RealImage& p, const RealImage& prof, double scale, double p_min) {
  for (std::size_t i = 0; i < p.size(); ++i)
    p[i] = prof[i] < 0.0 ? 1.0 : std::clamp(scale * prof[i], p_min, 1.0);
}

double total(const RealImage& p) {
  double s = 0.0;
  for (double v : p.values()) s += v;
  return s;
}

}  // namespace

DensityMap make_density(int rows, int cols, const DensityConfig& cfg) {
  require_image_shape(rows, cols);
  require(cfg.acceleration >= 1.0, "acceleration R must be >= 1");
  require(cfg.p_min > 0.0 && cfg.p_min <= 1.0, "p_min must be in (0, 1]");
  require(cfg.decay_exponent > 0.0, "decay exponent must be positive");
  require(cfg.calib_cols >= 0 && cfg.calib_cols <= cols, "calibration block does not fit the k-space width");
  require(cfg.layout == SamplingLayout::columns || (cfg.calib_rows >= 0 && cfg.calib_rows <= rows),
          "calibration block does not fit the k-space height");

  DensityMap d;
  d.p = RealImage(rows, cols, 1.0);
  d.calib_rows = cfg.layout == SamplingLayout::columns ? rows : cfg.calib_rows;
  d.calib_cols = cfg.calib_cols;
  d.target_acceleration = cfg.acceleration;
  d.layout = cfg.layout;
  if (cfg.acceleration == 1.0) return d;

  const double n = static_cast<double>(rows) * cols;
  const double target = n / cfg.acceleration;
  const RealImage prof = profile(d, cfg.decay_exponent);

  fill(d.p, prof, 0.0, cfg.p_min);
  const double floor_sum = total(d.p);
  double ceiling_sum = 0.0;
  for (double v : prof.values()) ceiling_sum += v < 0.0 || v > 0.0 ? 1.0 : cfg.p_min;
  if (target < floor_sum || target > ceiling_sum) {
    std::ostringstream msg;
    msg << "infeasible acceleration R = " << cfg.acceleration << ": with this calibration block and p_min the"
        << " feasible range is R in [" << n / ceiling_sum << ", " << n / floor_sum << "]";
    throw ValidationError(msg.str());
  }

  double lo = 0.0, hi = 1.0;
  fill(d.p, prof, hi, cfg.p_min);
  while (total(d.p) < target) {
    hi *= 2.0;
    fill(d.p, prof, hi, cfg.p_min);
  }
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    fill(d.p, prof, mid, cfg.p_min);
    const double s = total(d.p);
    if (std::abs(s - target) <= 1e-9 * target) break;
    (s < target ? lo : hi) = mid;
  }
  return d;
}

SamplingMask draw_mask(const DensityMap& density, std::uint64_t seed) {
  const int rows = density.p.rows(), cols = density.p.cols();
  SamplingMask mask{RealImage(rows, cols), seed};
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  if (density.layout == SamplingLayout::columns) {
    for (int c = 0; c < cols; ++c) {
      const double keep = u(rng) < density.p(0, c) ? 1.0 : 0.0;
      for (int r = 0; r < rows; ++r) mask.m(r, c) = keep;
    }
  } else {
    for (std::size_t i = 0; i < mask.m.size(); ++i) mask.m[i] = u(rng) < density.p[i] ? 1.0 : 0.0;
  }
  return mask;
}

double realized_acceleration(const SamplingMask& mask) {
  const std::size_t n = mask.sampled();
  require(n > 0, "mask samples no k-space locations");
  return static_cast<double>(mask.m.size()) / static_cast<double>(n);
}

}  // namespace pvdamp
