#include "pvdamp/coil.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "pvdamp/fft.hpp"

namespace pvdamp {

CoilSet normalize_sensitivities(const MultiCoilArray& raw) {
  CoilSet out{raw};
  const std::size_t n = raw.pixels();
  for (std::size_t i = 0; i < n; ++i) {
    double ss = 0.0;
    for (int c = 0; c < raw.coils(); ++c) ss += std::norm(raw.at(c, i));
    require(ss > 0.0 && std::isfinite(ss), "coil sensitivities vanish at pixel " + std::to_string(i));
    const double inv = 1.0 / std::sqrt(ss);
    for (int c = 0; c < raw.coils(); ++c) out.maps.at(c, i) *= inv;
  }
  return out;
}

CoilSet simulate_sensitivities(int rows, int cols, int n_coils, std::uint64_t seed, const SensitivityConfig& cfg) {
  require(n_coils >= 1, "coil count must be at least 1");
  require(rows > 0 && cols > 0, "coil map shape must be positive");
  require(cfg.width > 0.0, "coil width must be positive");

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  const double sigma = cfg.width * std::max(rows, cols);
  const double jitter = unit(rng) * std::numbers::pi / n_coils;

  MultiCoilArray raw(n_coils, rows, cols);
  for (int c = 0; c < n_coils; ++c) {
    const double angle = 2.0 * std::numbers::pi * c / n_coils + jitter;
    const double cr = rows / 2.0 + 0.5 * rows * std::sin(angle);
    const double cc = cols / 2.0 + 0.5 * cols * std::cos(angle);
    const double p0 = std::numbers::pi * unit(rng);
    double coef[5];
    for (double& a : coef) a = cfg.phase_scale * unit(rng);
    for (int r = 0; r < rows; ++r) {
      const double y = 2.0 * r / rows - 1.0;
      for (int k = 0; k < cols; ++k) {
        const double x = 2.0 * k / cols - 1.0;
        const double d2 = (r - cr) * (r - cr) + (k - cc) * (k - cc);
        const double mag = std::exp(-d2 / (2.0 * sigma * sigma));
        const double phase = p0 + coef[0] * x + coef[1] * y + coef[2] * x * y + coef[3] * x * x + coef[4] * y * y;
        raw.at(c, static_cast<std::size_t>(r) * cols + k) = std::polar(mag, phase);
      }
    }
  }
  return normalize_sensitivities(raw);
}

XiMap compute_xi(const CoilSet& coils, int levels) {
  XiMap xi;
  xi.coils = coils.coils();
  xi.map = SubbandMap(coils.rows(), coils.cols(), levels);
  xi.values.resize(static_cast<std::size_t>(xi.coils) * xi.map.size());
  for (int c = 0; c < coils.coils(); ++c) {
    ComplexImage conj_s(coils.rows(), coils.cols());
    auto s = coils.maps.coil(c);
    for (std::size_t i = 0; i < conj_s.size(); ++i) conj_s[i] = std::conj(s[i]);
    auto w = squared_filter_dwt2(conj_s, levels);
    std::copy(w.data.begin(), w.data.end(), xi.values.begin() + c * xi.map.size());
  }
  return xi;
}

double PcaCompression::retained_energy(int k) const {
  double top = 0.0, all = 0.0;
  for (std::size_t i = 0; i < singular_values.size(); ++i) {
    const double e = singular_values[i] * singular_values[i];
    all += e;
    if (static_cast<int>(i) < k) top += e;
  }
  return all > 0.0 ? top / all : 1.0;
}

MultiCoilArray extract_calibration(const MultiCoilArray& kspace, int rows, int cols) {
  require(rows > 0 && cols > 0 && rows <= kspace.rows() && cols <= kspace.cols(),
          "calibration block does not fit the k-space");
  MultiCoilArray out(kspace.coils(), rows, cols);
  const int r0 = kspace.rows() / 2 - rows / 2;
  const int c0 = kspace.cols() / 2 - cols / 2;
  for (int c = 0; c < kspace.coils(); ++c)
    for (int r = 0; r < rows; ++r)
      for (int k = 0; k < cols; ++k)
        out.at(c, static_cast<std::size_t>(r) * cols + k) =
            kspace.at(c, static_cast<std::size_t>(r0 + r) * kspace.cols() + c0 + k);
  return out;
}

PcaCompression pca_compress(const MultiCoilArray& calibration, const MultiCoilArray& full, int n_virtual) {
  const int nc = full.coils();
  require(calibration.coils() == nc, "calibration and full data have different coil counts");
  require(n_virtual >= 1 && n_virtual <= nc, "virtual coil count must be in [1, N_c]");

  Eigen::MatrixXcd a(nc, static_cast<Eigen::Index>(calibration.pixels()));
  for (int c = 0; c < nc; ++c)
    for (std::size_t i = 0; i < calibration.pixels(); ++i) a(c, static_cast<Eigen::Index>(i)) = calibration.at(c, i);
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(a, Eigen::ComputeFullU);

  PcaCompression out;
  out.basis = svd.matrixU().leftCols(n_virtual);
  for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i) out.singular_values.push_back(svd.singularValues()(i));
  out.singular_values.resize(nc, 0.0);

  out.kspace = MultiCoilArray(n_virtual, full.rows(), full.cols());
  Eigen::VectorXcd sample(nc);
  for (std::size_t i = 0; i < full.pixels(); ++i) {
    for (int c = 0; c < nc; ++c) sample(c) = full.at(c, i);
    Eigen::VectorXcd v = out.basis.adjoint() * sample;
    for (int k = 0; k < n_virtual; ++k) out.kspace.at(k, i) = v(k);
  }
  return out;
}

CoilSet compress_coils(const CoilSet& coils, const Eigen::MatrixXcd& basis) {
  require(basis.rows() == coils.coils(), "basis row count does not match coil count");
  const int nv = static_cast<int>(basis.cols());
  MultiCoilArray raw(nv, coils.rows(), coils.cols());
  Eigen::VectorXcd s(coils.coils());
  for (std::size_t i = 0; i < coils.maps.pixels(); ++i) {
    for (int c = 0; c < coils.coils(); ++c) s(c) = coils.maps.at(c, i);
    Eigen::VectorXcd v = basis.adjoint() * s;
    for (int k = 0; k < nv; ++k) raw.at(k, i) = v(k);
  }
  return normalize_sensitivities(raw);
}

namespace {

void require_compatible(const CoilSet& coils, int rows, int cols) {
  require(coils.rows() == rows && coils.cols() == cols, "coil maps and image have different shapes");
}

}  // namespace

MultiCoilArray forward(const ComplexImage& x, const CoilSet& coils, const RealImage& mask) {
  require_compatible(coils, x.rows(), x.cols());
  require(mask.same_shape(RealImage(x.rows(), x.cols())), "mask and image have different shapes");
  MultiCoilArray y(coils.coils(), x.rows(), x.cols());
  for (int c = 0; c < coils.coils(); ++c) {
    auto yc = y.coil(c);
    auto sc = coils.maps.coil(c);
    for (std::size_t i = 0; i < yc.size(); ++i) yc[i] = sc[i] * x[i];
    fft2c_inplace(yc, x.rows(), x.cols());
    for (std::size_t i = 0; i < yc.size(); ++i) yc[i] *= mask[i];
  }
  return y;
}

ComplexImage adjoint(const MultiCoilArray& y, const CoilSet& coils) {
  require(y.coils() == coils.coils(), "k-space and coil maps have different coil counts");
  require_compatible(coils, y.rows(), y.cols());
  ComplexImage x(y.rows(), y.cols());
  std::vector<cplx> buf(y.pixels());
  for (int c = 0; c < y.coils(); ++c) {
    auto yc = y.coil(c);
    std::copy(yc.begin(), yc.end(), buf.begin());
    ifft2c_inplace(buf, y.rows(), y.cols());
    auto sc = coils.maps.coil(c);
    for (std::size_t i = 0; i < buf.size(); ++i) x[i] += std::conj(sc[i]) * buf[i];
  }
  return x;
}

ComplexImage adjoint_compensated(const MultiCoilArray& y, const CoilSet& coils, const RealImage& density) {
  require(density.rows() == y.rows() && density.cols() == y.cols(), "density and k-space have different shapes");
  MultiCoilArray weighted = y;
  for (int c = 0; c < y.coils(); ++c) {
    auto wc = weighted.coil(c);
    for (std::size_t i = 0; i < wc.size(); ++i) {
      if (wc[i] == cplx{}) continue;
      require(density[i] > 0.0, "sampling probability is zero at a sampled k-space location");
      wc[i] /= density[i];
    }
  }
  return adjoint(weighted, coils);
}

}  // namespace pvdamp
