#pragma once

#include <Eigen/Dense>
#include <nlohmann/json.hpp>
#include <vector>

#include "pvdamp/coil.hpp"
#include "pvdamp/core.hpp"
#include "pvdamp/wavelet.hpp"

namespace pvdamp {

/// Measurement-noise covariance E{eps_i eps_i^H} across coils. One matrix shared by
/// every k-space location unless a per-location family is given.
struct NoiseCov {
  Eigen::MatrixXcd shared;
  std::vector<Eigen::MatrixXcd> per_location;

  static NoiseCov zeros(int coils);
  static NoiseCov white(int coils, double variance);

  int coils() const { return static_cast<int>(shared.rows()); }
  bool is_zero() const;
  const Eigen::MatrixXcd& at(std::size_t location) const {
    return per_location.empty() ? shared : per_location[location];
  }
  /// Hermitian to 1e-12 and eigenvalues >= -1e-12, else ValidationError.
  void validate() const;
};

/// Per-coefficient aliasing variance over the wavelet layout.
struct TauMap {
  std::vector<double> tau;
  SubbandMap map;
  std::size_t clamped = 0;  // quadratic forms that came out negative and were set to 0

  double mean() const;
  std::vector<double> band_means() const;
  double floor() const { return 1e-14 * max(); }
  double max() const;
};

/// Everything line 1 of the iteration precomputes: band spectra and xi.
struct AliasingModel {
  SubbandMap map;
  std::vector<RealImage> spectra;
  XiMap xi;
};

AliasingModel make_aliasing_model(const CoilSet& coils, int levels);

/// Per band b, M_b = sum_i P_b(w_i) (m_i / p_i) [((1 - p_i) / p_i) z_i z_i^H + Sigma_i],
/// then tau_j = Re(xi_j^H M_b xi_j) clamped at zero. Linear in N, quadratic in N_c.
/// `z` must already vanish off the mask.
TauMap tau_update(const MultiCoilArray& z, const RealImage& mask, const RealImage& density, const NoiseCov& noise,
                  const AliasingModel& model);

/// Expected tau over masks and noise given the fully sampled coil k-space y0:
/// xi_j^H [sum_i P_b(w_i) (((1 - p_i) / p_i) y0_i y0_i^H + Sigma_i / p_i)] xi_j.
TauMap tau_expectation(const MultiCoilArray& y0, const RealImage& density, const NoiseCov& noise,
                       const AliasingModel& model);

struct EmpiricalError {
  std::vector<double> per_coefficient;  // |r_j - w_j|^2
  std::vector<double> band_means;
};

EmpiricalError empirical_error(const WaveletCoeffs& r, const WaveletCoeffs& w_true);

/// eta_j = (r_j - w_j) / sqrt(tau_j) over coefficients with tau_j above the floor
/// (1e-14 max tau); others are flagged excluded and left at zero.
struct NormalizedResidual {
  std::vector<cplx> eta;
  std::vector<bool> included;
  SubbandMap map;
};

NormalizedResidual normalized_residual(const WaveletCoeffs& r, const WaveletCoeffs& w_true, const TauMap& tau);

/// [{band, orientation, scale, count, mean_tau}, ...]
nlohmann::json tau_band_summary(const TauMap& tau);

}  // namespace pvdamp
