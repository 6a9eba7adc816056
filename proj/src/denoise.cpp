#include "pvdamp/denoise.hpp"

#include <algorithm>
#include <cmath>

#include "pvdamp/errors.hpp"

namespace pvdamp {

const char* denoiser_mode_name(DenoiserMode mode) {
  return mode == DenoiserMode::tau_scaled ? "tau_scaled" : "flat_per_band";
}

DenoiserMode parse_denoiser_mode(const std::string& name) {
  if (name == "tau_scaled") return DenoiserMode::tau_scaled;
  if (name == "flat_per_band") return DenoiserMode::flat_per_band;
  throw ValidationError("unknown denoiser mode '" + name + "'");
}

DenoiseResult soft_threshold(const WaveletCoeffs& r, std::span<const double> lambda) {
  require(lambda.size() == r.data.size(), "threshold count does not match coefficient count");
  DenoiseResult out{r, std::vector<double>(r.data.size()), {}, {}};
  for (std::size_t j = 0; j < r.data.size(); ++j) {
    const double l = lambda[j];
    require(l >= 0.0 && std::isfinite(l), "soft threshold must be finite and non-negative");
    const double mag = std::abs(r.data[j]);
    if (mag > l) {
      out.w_hat.data[j] = r.data[j] * (1.0 - l / mag);
      out.div[j] = 1.0 - l / (2.0 * mag);
    } else {
      out.w_hat.data[j] = 0.0;
      out.div[j] = 0.0;
    }
  }
  out.alpha = subband_divergence(out.div, r.map);
  return out;
}

CsureValue csure(const WaveletCoeffs& w_hat, const WaveletCoeffs& r, std::span<const double> div,
                 std::span<const double> tau) {
  const std::size_t n = r.data.size();
  require(w_hat.data.size() == n && div.size() == n && tau.size() == n, "cSURE inputs differ in length");
  require(w_hat.map == r.map, "cSURE inputs use different wavelet layouts");
  CsureValue out;
  for (const auto& b : r.map.bands()) {
    double s = 0.0;
    for (std::size_t j = b.offset; j < b.end(); ++j)
      s += std::norm(w_hat.data[j] - r.data[j]) + tau[j] * (2.0 * div[j] - 1.0);
    out.per_band.push_back(s);
    out.total += s;
  }
  return out;
}

namespace {

double coefficient_threshold(double t, double tau, DenoiserMode mode) {
  return mode == DenoiserMode::tau_scaled ? t * std::sqrt(tau) : t;
}

void require_tau(const WaveletCoeffs& r, std::span<const double> tau) {
  require(tau.size() == r.data.size(), "tau length does not match coefficient count");
  for (double t : tau) require(t >= 0.0 && std::isfinite(t), "tau must be finite and non-negative");
}

double tau_floor(std::span<const double> tau) {
  double m = 0.0;
  for (double t : tau) m = std::max(m, t);
  return 1e-14 * m;
}

bool band_is_noiseless(std::span<const double> tau, const Band& b, double floor) {
  for (std::size_t j = b.offset; j < b.end(); ++j)
    if (tau[j] > floor) return false;
  return true;
}

}  // namespace

double band_csure(const WaveletCoeffs& r, std::span<const double> tau, int band, double t, DenoiserMode mode) {
  const Band& b = r.map.band(band);
  double s = 0.0;
  for (std::size_t j = b.offset; j < b.end(); ++j) {
    const double l = coefficient_threshold(t, tau[j], mode);
    const double mag = std::abs(r.data[j]);
    if (mag > l)
      s += l * l + tau[j] * (1.0 - l / mag);
    else
      s += mag * mag - tau[j];
  }
  return s;
}

double band_t_max(const WaveletCoeffs& r, std::span<const double> tau, int band, DenoiserMode mode) {
  const Band& b = r.map.band(band);
  const double floor = tau_floor(tau);
  double t = 0.0;
  for (std::size_t j = b.offset; j < b.end(); ++j) {
    const double mag = std::abs(r.data[j]);
    if (mode == DenoiserMode::flat_per_band)
      t = std::max(t, mag);
    else if (tau[j] > floor)
      t = std::max(t, mag / std::sqrt(tau[j]));
  }
  return t;
}

ThresholdSet tune_thresholds(const WaveletCoeffs& r, std::span<const double> tau, DenoiserMode mode) {
  require_tau(r, tau);
  const double floor = tau_floor(tau);
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  ThresholdSet out{std::vector<double>(r.map.band_count(), 0.0), mode};
  for (const auto& b : r.map.bands()) {
    if (band_is_noiseless(tau, b, floor)) continue;
    const double t_max = band_t_max(r, tau, b.id, mode);
    auto f = [&](double t) { return band_csure(r, tau, b.id, t, mode); };

    double lo = 0.0, hi = t_max;
    double x1 = hi - inv_phi * (hi - lo), x2 = lo + inv_phi * (hi - lo);
    double f1 = f(x1), f2 = f(x2);
    for (int it = 0; it < 50; ++it) {
      if (f1 <= f2) {
        hi = x2;
        x2 = x1;
        f2 = f1;
        x1 = hi - inv_phi * (hi - lo);
        f1 = f(x1);
      } else {
        lo = x1;
        x1 = x2;
        f1 = f2;
        x2 = lo + inv_phi * (hi - lo);
        f2 = f(x2);
      }
    }
    double best_t = 0.5 * (lo + hi), best_f = f(best_t);
    for (double cand : {0.0, t_max}) {
      const double fc = f(cand);
      if (fc < best_f) {
        best_f = fc;
        best_t = cand;
      }
    }
    out.t[b.id] = best_t;
  }
  return out;
}

std::vector<double> threshold_values(const ThresholdSet& thresholds, const SubbandMap& map,
                                     std::span<const double> tau) {
  require(thresholds.t.size() == static_cast<std::size_t>(map.band_count()), "one threshold per band required");
  require(tau.size() == map.size(), "tau length does not match the wavelet layout");
  std::vector<double> lambda(map.size());
  for (const auto& b : map.bands()) {
    require(thresholds.t[b.id] >= 0.0 && std::isfinite(thresholds.t[b.id]), "band threshold must be non-negative");
    for (std::size_t j = b.offset; j < b.end(); ++j)
      lambda[j] = coefficient_threshold(thresholds.t[b.id], tau[j], thresholds.mode);
  }
  return lambda;
}

std::vector<double> subband_divergence(std::span<const double> div, const SubbandMap& map) {
  require(div.size() == map.size(), "divergence length does not match the wavelet layout");
  std::vector<double> alpha;
  alpha.reserve(map.band_count());
  for (const auto& b : map.bands()) {
    double s = 0.0;
    for (std::size_t j = b.offset; j < b.end(); ++j) s += div[j];
    alpha.push_back(s / static_cast<double>(b.count()));
  }
  return alpha;
}

SureDenoise sure_denoise(const WaveletCoeffs& r, std::span<const double> tau, DenoiserMode mode) {
  SureDenoise out;
  out.thresholds = tune_thresholds(r, tau, mode);
  out.result = soft_threshold(r, threshold_values(out.thresholds, r.map, tau));
  out.result.csure_b = csure(out.result.w_hat, r, out.result.div, tau).per_band;
  return out;
}

}  // namespace pvdamp
