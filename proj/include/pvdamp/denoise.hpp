#pragma once

#include <span>
#include <string>
#include <vector>

#include "pvdamp/wavelet.hpp"

namespace pvdamp {

/// How a band's tuned scalar t_b becomes per-coefficient thresholds.
/// tau_scaled: lambda_j = t_b sqrt(tau_j). flat_per_band: lambda_j = t_b.
enum class DenoiserMode { tau_scaled, flat_per_band };

const char* denoiser_mode_name(DenoiserMode mode);
DenoiserMode parse_denoiser_mode(const std::string& name);

struct ThresholdSet {
  std::vector<double> t;  // one per band
  DenoiserMode mode = DenoiserMode::tau_scaled;
};

struct DenoiseResult {
  WaveletCoeffs w_hat;
  std::vector<double> div;      // per coefficient
  std::vector<double> alpha;    // per band, mean of div
  std::vector<double> csure_b;  // per band; empty when no tau was supplied
};

struct CsureValue {
  double total = 0.0;
  std::vector<double> per_band;
};

/// Complex soft thresholding w = r max(1 - lambda/|r|, 0) and its divergence
/// 1 - lambda/(2|r|) (0 on or inside the threshold circle).
DenoiseResult soft_threshold(const WaveletCoeffs& r, std::span<const double> lambda);

/// sum_j |w_hat_j - r_j|^2 + tau_j (2 div_j - 1), per band and in total.
CsureValue csure(const WaveletCoeffs& w_hat, const WaveletCoeffs& r, std::span<const double> div,
                 std::span<const double> tau);

/// Per-band cSURE of soft thresholding at scalar t, evaluated in closed form.
double band_csure(const WaveletCoeffs& r, std::span<const double> tau, int band, double t, DenoiserMode mode);

/// Largest useful t for a band: beyond it every coefficient is zeroed.
double band_t_max(const WaveletCoeffs& r, std::span<const double> tau, int band, DenoiserMode mode);

/// Golden-section minimization (50 iterations) of each band's cSURE over [0, t_max],
/// keeping the best of the search result, t = 0 and t = t_max. Bands whose tau is
/// entirely at or below the floor (1e-14 max tau) get t_b = 0.
ThresholdSet tune_thresholds(const WaveletCoeffs& r, std::span<const double> tau,
                             DenoiserMode mode = DenoiserMode::tau_scaled);

/// Per-coefficient thresholds for a tuned set.
std::vector<double> threshold_values(const ThresholdSet& thresholds, const SubbandMap& map,
                                     std::span<const double> tau);

/// alpha_b = mean of div over band b.
std::vector<double> subband_divergence(std::span<const double> div, const SubbandMap& map);

/// Tune, threshold, and attach alpha and per-band cSURE.
struct SureDenoise {
  ThresholdSet thresholds;
  DenoiseResult result;
};
SureDenoise sure_denoise(const WaveletCoeffs& r, std::span<const double> tau,
                         DenoiserMode mode = DenoiserMode::tau_scaled);

}  // namespace pvdamp
