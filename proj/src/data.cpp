#include "pvdamp/data.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "pvdamp/errors.hpp"

namespace pvdamp {

const char* phantom_kind_name(PhantomKind kind) {
  return kind == PhantomKind::ellipses ? "ellipses" : "blobs_and_vessels";
}

PhantomKind parse_phantom_kind(const std::string& name) {
  if (name == "ellipses") return PhantomKind::ellipses;
  if (name == "blobs_and_vessels") return PhantomKind::blobs_and_vessels;
  throw ValidationError("unknown phantom kind '" + name + "'");
}

const char* noise_model_name(NoiseModel model) { return model == NoiseModel::diagonal ? "diagonal" : "correlated"; }

NoiseModel parse_noise_model(const std::string& name) {
  if (name == "diagonal") return NoiseModel::diagonal;
  if (name == "correlated") return NoiseModel::correlated;
  throw ValidationError("unknown noise model '" + name + "'");
}

namespace {

struct Ellipse {
  double cx, cy, a, b, angle, value;

  bool contains(double x, double y) const {
    const double c = std::cos(angle), s = std::sin(angle);
    const double u = (x - cx) * c + (y - cy) * s, v = -(x - cx) * s + (y - cy) * c;
    return (u * u) / (a * a) + (v * v) / (b * b) <= 1.0;
  }
};

struct Vessel {
  double x0, y0, dir, length, amplitude, freq, phase, width, value;
};

// Normalized coordinate of sub-sample s (of n) inside pixel index i along an axis of `size` pixels.
double coord(int i, int s, int n, int size) { return 2.0 * (i + (s + 0.5) / n) / size - 1.0; }

}  // namespace

Phantom make_phantom(int rows, int cols, std::uint64_t seed, PhantomKind kind) {
  require_image_shape(rows, cols);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto range = [&](double lo, double hi) { return lo + (hi - lo) * u(rng); };

  std::vector<Ellipse> ellipses;
  ellipses.push_back({range(-0.03, 0.03), range(-0.03, 0.03), range(0.78, 0.88), range(0.65, 0.75), range(-0.2, 0.2),
                      0.55});
  ellipses.push_back({ellipses[0].cx, ellipses[0].cy, ellipses[0].a - 0.08, ellipses[0].b - 0.08, ellipses[0].angle,
                      -0.2});
  const int n_inner = 5 + static_cast<int>(u(rng) * 4);
  for (int k = 0; k < n_inner; ++k)
    ellipses.push_back({range(-0.45, 0.45), range(-0.4, 0.4), range(0.06, 0.3), range(0.04, 0.22),
                        range(0.0, std::numbers::pi), range(-0.25, 0.45)});

  double phase_coef[6];
  for (double& c : phase_coef) c = range(-0.6, 0.6);

  // Area-averaged ellipse intensities (4 x 4 sub-samples per pixel).
  const int sub = 4;
  RealImage mag(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      double acc = 0.0;
      for (int sr = 0; sr < sub; ++sr)
        for (int sc = 0; sc < sub; ++sc) {
          const double y = coord(r, sr, sub, rows), x = coord(c, sc, sub, cols);
          for (const auto& e : ellipses)
            if (e.contains(x, y)) acc += e.value;
        }
      mag(r, c) = std::max(0.0, acc / (sub * sub));
    }

  nlohmann::json features = nlohmann::json::array();
  for (const auto& e : ellipses)
    features.push_back({{"type", "ellipse"}, {"cx", e.cx}, {"cy", e.cy}, {"a", e.a}, {"b", e.b},
                        {"angle", e.angle}, {"value", e.value}});

  if (kind == PhantomKind::blobs_and_vessels) {
    const int n_blobs = 3 + static_cast<int>(u(rng) * 3);
    for (int k = 0; k < n_blobs; ++k) {
      const double bx = range(-0.5, 0.5), by = range(-0.45, 0.45), sigma = range(0.04, 0.1), value = range(0.25, 0.5);
      for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) {
          const double y = coord(r, 0, 1, rows), x = coord(c, 0, 1, cols);
          const double d2 = (x - bx) * (x - bx) + (y - by) * (y - by);
          mag(r, c) += value * std::exp(-d2 / (2.0 * sigma * sigma));
        }
      features.push_back({{"type", "blob"}, {"cx", bx}, {"cy", by}, {"sigma", sigma}, {"value", value}});
    }
    const int n_vessels = 3 + static_cast<int>(u(rng) * 2);
    for (int k = 0; k < n_vessels; ++k) {
      Vessel v{range(-0.55, -0.1), range(-0.45, 0.45), range(-0.6, 0.6), range(0.6, 1.0), range(0.03, 0.12),
               range(0.5, 2.0), range(0.0, 2.0 * std::numbers::pi), range(0.45, 0.8), range(0.7, 1.0)};
      if (u(rng) < 0.5) {  // mirror half of them so vessels run in both directions
        v.x0 = -v.x0;
        v.dir += std::numbers::pi;
      }
      const int samples = 4 * std::max(rows, cols);
      std::vector<std::pair<double, double>> pts;  // pixel units (col, row)
      for (int s = 0; s <= samples; ++s) {
        const double t = static_cast<double>(s) / samples;
        const double off = v.amplitude * std::sin(2.0 * std::numbers::pi * v.freq * t + v.phase);
        const double x = v.x0 + t * v.length * std::cos(v.dir) - off * std::sin(v.dir);
        const double y = v.y0 + t * v.length * std::sin(v.dir) + off * std::cos(v.dir);
        pts.emplace_back((x + 1.0) * cols / 2.0 - 0.5, (y + 1.0) * rows / 2.0 - 0.5);
      }
      for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) {
          double d2 = 1e30;
          for (const auto& [pc, pr] : pts) d2 = std::min(d2, (c - pc) * (c - pc) + (r - pr) * (r - pr));
          if (d2 < 16.0) mag(r, c) += v.value * std::exp(-d2 / (2.0 * v.width * v.width));
        }
      features.push_back({{"type", "vessel"}, {"x0", v.x0}, {"y0", v.y0}, {"direction", v.dir},
                          {"length", v.length}, {"amplitude", v.amplitude}, {"frequency", v.freq},
                          {"width_px", v.width}, {"value", v.value}});
    }
  }

  ComplexImage x0(rows, cols);
  double peak = 0.0;
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      const double y = coord(r, 0, 1, rows), x = coord(c, 0, 1, cols);
      const double phi = phase_coef[0] + phase_coef[1] * x + phase_coef[2] * y + phase_coef[3] * x * y +
                         phase_coef[4] * x * x + phase_coef[5] * y * y;
      x0(r, c) = std::polar(mag(r, c), phi);
      peak = std::max(peak, mag(r, c));
    }
  require(peak > 0.0, "phantom came out empty");
  for (auto& v : x0.values()) v /= peak;

  Phantom p{std::move(x0), {}};
  p.descriptor = {{"shape", {rows, cols}},
                  {"seed", seed},
                  {"kind", phantom_kind_name(kind)},
                  {"phase_coefficients", std::vector<double>(phase_coef, phase_coef + 6)},
                  {"features", features}};
  return p;
}

nlohmann::json NoiseSpec::to_json() const {
  nlohmann::json vj = nlohmann::json::array();
  for (const auto& e : v) vj.push_back({e.real(), e.imag()});
  return {{"model", noise_model_name(model)}, {"snr_db", snr_db}, {"c", c}, {"v", vj}};
}

double signal_power(const ComplexImage& x0, const CoilSet& coils) {
  require(coils.rows() == x0.rows() && coils.cols() == x0.cols(), "coil maps and image have different shapes");
  double total = 0.0;
  for (int c = 0; c < coils.coils(); ++c) {
    auto s = coils.maps.coil(c);
    for (std::size_t i = 0; i < x0.size(); ++i) total += std::norm(s[i] * x0[i]);
  }
  return total / (static_cast<double>(coils.coils()) * static_cast<double>(x0.size()));
}

NoiseSpec make_noise_cov(int n_coils, double snr_db, std::uint64_t seed, double power, NoiseModel model) {
  require(n_coils >= 1, "coil count must be at least 1");
  require(std::isfinite(snr_db) && snr_db > 0.0, "SNR must be positive (dB)");
  require(power > 0.0 && std::isfinite(power), "signal power must be positive");
  NoiseSpec spec;
  spec.model = model;
  spec.snr_db = snr_db;
  spec.c = std::sqrt(power / std::pow(10.0, snr_db / 10.0));

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Eigen::VectorXcd v(n_coils);
  for (int k = 0; k < n_coils; ++k) {
    cplx d(u(rng), u(rng));
    while (std::abs(d) == 0.0) d = cplx(u(rng), u(rng));
    v(k) = spec.c * d / std::abs(d);
    spec.v.push_back(v(k));
  }
  const double c2 = spec.c * spec.c;
  if (model == NoiseModel::diagonal)
    spec.cov = NoiseCov::white(n_coils, c2);
  else
    spec.cov = NoiseCov{v * v.adjoint() + 0.01 * c2 * Eigen::MatrixXcd::Identity(n_coils, n_coils), {}};
  return spec;
}

namespace {

// Hermitian square root factor L with L L^H = sigma (sigma PSD).
Eigen::MatrixXcd covariance_factor(const Eigen::MatrixXcd& sigma) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(sigma);
  Eigen::VectorXd d = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return eig.eigenvectors() * d.asDiagonal();
}

}  // namespace

MultiCoilArray acquire(const ComplexImage& x0, const CoilSet& coils, const RealImage& mask, const NoiseCov& noise,
                       std::uint64_t seed) {
  require(noise.coils() == coils.coils(), "noise covariance and coil counts differ");
  noise.validate();
  RealImage full(x0.rows(), x0.cols(), 1.0);
  MultiCoilArray y = forward(x0, coils, full);
  require(mask.rows() == x0.rows() && mask.cols() == x0.cols(), "mask and image have different shapes");
  require(noise.per_location.empty() || noise.per_location.size() == y.pixels(),
          "per-location noise family must cover every k-space location");

  const int nc = coils.coils();
  if (!noise.is_zero()) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n(0.0, std::sqrt(0.5));
    const Eigen::MatrixXcd shared = covariance_factor(noise.shared);
    Eigen::VectorXcd g(nc);
    for (std::size_t i = 0; i < y.pixels(); ++i) {
      for (int c = 0; c < nc; ++c) {
        const double re = n(rng);
        g(c) = cplx(re, n(rng));
      }
      const Eigen::VectorXcd e =
          (noise.per_location.empty() ? shared : covariance_factor(noise.per_location[i])) * g;
      for (int c = 0; c < nc; ++c) y.at(c, i) += e(c);
    }
  }
  for (int c = 0; c < nc; ++c) {
    auto yc = y.coil(c);
    for (std::size_t i = 0; i < yc.size(); ++i) yc[i] *= mask[i];
  }
  return y;
}

}  // namespace pvdamp
