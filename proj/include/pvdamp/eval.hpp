#pragma once

#include <nlohmann/json.hpp>
#include <span>
#include <vector>

#include "pvdamp/aliasing.hpp"
#include "pvdamp/core.hpp"

namespace pvdamp {

/// NMSE values at or below this are reported as the floor.
inline constexpr double kNmseFloorDb = -300.0;

/// 1 where |x_ref| >= fraction * max|x_ref|, else 0.
RealImage support_mask(const ComplexImage& x_ref, double fraction = 0.05);

/// 10 log10(|mask (x_hat - x_ref)|^2 / |mask x_ref|^2), floored at -300 dB.
double nmse_db(const ComplexImage& x_hat, const ComplexImage& x_ref, const RealImage& mask);

/// SSIM of magnitude images scaled by max|x_ref| (dynamic range 1), 11x11 Gaussian
/// window with sigma 1.5, K1 = 0.01, K2 = 0.03, circular boundaries. Averaged over
/// pixels where mask is nonzero.
double ssim(const ComplexImage& x_hat, const ComplexImage& x_ref, const RealImage& mask);

/// 15x15 zero-mean Laplacian-of-Gaussian kernel, sigma 1.5, centred at (7, 7).
RealImage log_kernel();

/// |LoG * (|x_hat| - |x_ref|)|_2 / |x_ref|_2 with circular convolution, unmasked.
double hfen(const ComplexImage& x_hat, const ComplexImage& x_ref);

struct MetricsReport {
  double nmse_db = 0.0;
  double ssim = 0.0;
  double hfen = 0.0;
  double mask_fraction = 0.0;  // fraction of pixels kept by the support mask

  nlohmann::json to_json() const;
};

MetricsReport evaluate_metrics(const ComplexImage& x_hat, const ComplexImage& x_ref, double fraction = 0.05);

struct GaussianityBounds {
  double variance_tol = 0.05;  // |var(Re eta) - 0.5| and |var(Im eta) - 0.5|
  double kurtosis_tol = 0.3;   // |excess kurtosis| of Re and Im parts

  static GaussianityBounds relaxed() { return {0.1, 0.5}; }
};

struct EtaStats {
  std::size_t count = 0;
  cplx mean{};
  double var_re = 0.0;
  double var_im = 0.0;
  double kurtosis_re = 0.0;  // excess
  double kurtosis_im = 0.0;

  bool variance_ok(const GaussianityBounds& b) const;
  bool kurtosis_ok(const GaussianityBounds& b) const;
  nlohmann::json to_json() const;
};

/// Moments of the included entries.
EtaStats eta_stats(std::span<const cplx> eta, const std::vector<bool>& included);

struct IterationGaussianity {
  int iteration = 0;
  EtaStats pooled;
  std::vector<EtaStats> bands;  // informational
  bool variance_ok = false;
  bool kurtosis_ok = false;
  bool pass() const { return variance_ok && kurtosis_ok; }
};

struct GaussianityReport {
  GaussianityBounds bounds;
  std::vector<IterationGaussianity> iterations;

  bool all_pass() const;
  nlohmann::json to_json() const;
};

/// Pass flags use the pooled statistics of each iteration.
IterationGaussianity gaussianity(const NormalizedResidual& eta, const GaussianityBounds& bounds, int iteration = 0);
GaussianityReport se_report(const std::vector<NormalizedResidual>& per_iteration,
                            const GaussianityBounds& bounds = GaussianityBounds{});

}  // namespace pvdamp
