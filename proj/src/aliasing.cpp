#include "pvdamp/aliasing.hpp"

#include <algorithm>
#include <cmath>

namespace pvdamp {

NoiseCov NoiseCov::zeros(int coils) { return NoiseCov{Eigen::MatrixXcd::Zero(coils, coils), {}}; }

NoiseCov NoiseCov::white(int coils, double variance) {
  require(variance >= 0.0, "noise variance must be non-negative");
  return NoiseCov{variance * Eigen::MatrixXcd::Identity(coils, coils), {}};
}

bool NoiseCov::is_zero() const {
  if (shared.size() > 0 && shared.cwiseAbs().maxCoeff() != 0.0) return false;
  for (const auto& m : per_location)
    if (m.cwiseAbs().maxCoeff() != 0.0) return false;
  return true;
}

namespace {

void validate_matrix(const Eigen::MatrixXcd& m, int coils) {
  require(m.rows() == coils && m.cols() == coils, "noise covariance must be N_c x N_c");
  require((m - m.adjoint()).cwiseAbs().maxCoeff() <= 1e-12 * std::max(1.0, m.cwiseAbs().maxCoeff()),
          "noise covariance is not Hermitian");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(m, Eigen::EigenvaluesOnly);
  require(eig.eigenvalues().minCoeff() >= -1e-12 * std::max(1.0, m.cwiseAbs().maxCoeff()),
          "noise covariance is not positive semidefinite");
}

}  // namespace

void NoiseCov::validate() const {
  require(shared.rows() > 0, "noise covariance is empty");
  validate_matrix(shared, coils());
  for (const auto& m : per_location) validate_matrix(m, coils());
}

double TauMap::mean() const {
  double s = 0.0;
  for (double t : tau) s += t;
  return tau.empty() ? 0.0 : s / static_cast<double>(tau.size());
}

double TauMap::max() const { return tau.empty() ? 0.0 : *std::max_element(tau.begin(), tau.end()); }

std::vector<double> TauMap::band_means() const {
  std::vector<double> out;
  for (const auto& b : map.bands()) {
    double s = 0.0;
    for (std::size_t j = b.offset; j < b.end(); ++j) s += tau[j];
    out.push_back(s / static_cast<double>(b.count()));
  }
  return out;
}

AliasingModel make_aliasing_model(const CoilSet& coils, int levels) {
  AliasingModel model;
  model.map = SubbandMap(coils.rows(), coils.cols(), levels);
  model.spectra = subband_power_spectra(coils.rows(), coils.cols(), levels);
  model.xi = compute_xi(coils, levels);
  return model;
}

namespace {

// Per-band N_c x N_c moment matrices, stored band-major, row-major within band.
class BandMoments {
 public:
  BandMoments(int bands, int coils) : coils_(coils), m_(static_cast<std::size_t>(bands) * coils * coils) {}

  // M_b += weight_b(i) * (scale * z z^H + noise_scale * Sigma)
  void add(const std::vector<RealImage>& spectra, std::size_t i, const cplx* z, double scale, double noise_scale,
           const Eigen::MatrixXcd* sigma) {
    const int nc = coils_;
    outer_.resize(static_cast<std::size_t>(nc) * nc);
    for (int a = 0; a < nc; ++a)
      for (int b = 0; b < nc; ++b) {
        cplx v = scale * z[a] * std::conj(z[b]);
        if (sigma) v += noise_scale * (*sigma)(a, b);
        outer_[a * nc + b] = v;
      }
    for (std::size_t band = 0; band < spectra.size(); ++band) {
      const double w = spectra[band][i];
      if (w == 0.0) continue;
      cplx* dst = m_.data() + band * nc * nc;
      for (std::size_t k = 0; k < outer_.size(); ++k) dst[k] += w * outer_[k];
    }
  }

  // Re(xi^T M_b conj(xi)); negative values clamped to 0. With xi = conj(S) this is the
  // variance of sum_c conj(S_c) z_c.
  TauMap evaluate(const AliasingModel& model) const {
    const int nc = coils_;
    const std::size_t n = model.map.size();
    TauMap out{std::vector<double>(n), model.map, 0};
    std::vector<cplx> xi(nc);
    for (const auto& band : model.map.bands()) {
      const cplx* m = m_.data() + static_cast<std::size_t>(band.id) * nc * nc;
      for (std::size_t j = band.offset; j < band.end(); ++j) {
        for (int c = 0; c < nc; ++c) xi[c] = model.xi.values[c * n + j];
        double acc = 0.0;
        for (int a = 0; a < nc; ++a) {
          cplx row{};
          for (int b = 0; b < nc; ++b) row += m[a * nc + b] * std::conj(xi[b]);
          acc += (xi[a] * row).real();
        }
        if (acc < 0.0) {
          acc = 0.0;
          ++out.clamped;
        }
        out.tau[j] = acc;
      }
    }
    return out;
  }

 private:
  int coils_;
  std::vector<cplx> m_;
  std::vector<cplx> outer_;
};

void require_model_matches(const MultiCoilArray& k, const RealImage& density, const NoiseCov& noise,
                           const AliasingModel& model) {
  require(k.rows() == model.map.rows() && k.cols() == model.map.cols(), "k-space and wavelet layout shapes differ");
  require(density.rows() == k.rows() && density.cols() == k.cols(), "density and k-space shapes differ");
  require(k.coils() == model.xi.coils, "k-space and xi coil counts differ");
  require(noise.coils() == k.coils(), "noise covariance and k-space coil counts differ");
  require(noise.per_location.empty() || noise.per_location.size() == k.pixels(),
          "per-location noise family must cover every k-space location");
}

}  // namespace

TauMap tau_update(const MultiCoilArray& z, const RealImage& mask, const RealImage& density, const NoiseCov& noise,
                  const AliasingModel& model) {
  require_model_matches(z, density, noise, model);
  require(mask.same_shape(density), "mask and density shapes differ");
  const int nc = z.coils();
  const bool with_noise = !noise.is_zero();
  BandMoments moments(model.map.band_count(), nc);
  std::vector<cplx> zi(nc);
  for (std::size_t i = 0; i < z.pixels(); ++i) {
    const double m = mask[i];
    if (m == 0.0) continue;
    const double p = density[i];
    require(p > 0.0, "sampling probability is zero at a sampled k-space location");
    for (int c = 0; c < nc; ++c) zi[c] = z.at(c, i);
    const double weight = m / p;
    moments.add(model.spectra, i, zi.data(), weight * (1.0 - p) / p, weight, with_noise ? &noise.at(i) : nullptr);
  }
  return moments.evaluate(model);
}

TauMap tau_expectation(const MultiCoilArray& y0, const RealImage& density, const NoiseCov& noise,
                       const AliasingModel& model) {
  require_model_matches(y0, density, noise, model);
  const int nc = y0.coils();
  const bool with_noise = !noise.is_zero();
  BandMoments moments(model.map.band_count(), nc);
  std::vector<cplx> yi(nc);
  for (std::size_t i = 0; i < y0.pixels(); ++i) {
    const double p = density[i];
    require(p > 0.0, "sampling probability must be positive everywhere");
    for (int c = 0; c < nc; ++c) yi[c] = y0.at(c, i);
    moments.add(model.spectra, i, yi.data(), (1.0 - p) / p, 1.0 / p, with_noise ? &noise.at(i) : nullptr);
  }
  return moments.evaluate(model);
}

EmpiricalError empirical_error(const WaveletCoeffs& r, const WaveletCoeffs& w_true) {
  require(r.map == w_true.map && r.data.size() == w_true.data.size(), "coefficient layouts differ");
  EmpiricalError out;
  out.per_coefficient.resize(r.data.size());
  for (std::size_t j = 0; j < r.data.size(); ++j) out.per_coefficient[j] = std::norm(r.data[j] - w_true.data[j]);
  for (const auto& b : r.map.bands()) {
    double s = 0.0;
    for (std::size_t j = b.offset; j < b.end(); ++j) s += out.per_coefficient[j];
    out.band_means.push_back(s / static_cast<double>(b.count()));
  }
  return out;
}

NormalizedResidual normalized_residual(const WaveletCoeffs& r, const WaveletCoeffs& w_true, const TauMap& tau) {
  require(r.map == w_true.map && r.map == tau.map, "coefficient layouts differ");
  const double floor = tau.floor();
  NormalizedResidual out{std::vector<cplx>(r.data.size()), std::vector<bool>(r.data.size(), false), r.map};
  for (std::size_t j = 0; j < r.data.size(); ++j) {
    if (tau.tau[j] <= floor || tau.tau[j] <= 0.0) continue;
    out.eta[j] = (r.data[j] - w_true.data[j]) / std::sqrt(tau.tau[j]);
    out.included[j] = true;
  }
  return out;
}

nlohmann::json tau_band_summary(const TauMap& tau) {
  nlohmann::json rows = nlohmann::json::array();
  const auto means = tau.band_means();
  for (const auto& b : tau.map.bands())
    rows.push_back({{"band", b.id},
                    {"orientation", orientation_name(b.orientation)},
                    {"scale", b.scale},
                    {"count", b.count()},
                    {"mean_tau", means[b.id]}});
  return rows;
}

}  // namespace pvdamp
