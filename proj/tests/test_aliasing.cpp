#include <cmath>

#include "doctest.h"
#include "oracles.hpp"
#include "pvdamp/aliasing.hpp"
#include "pvdamp/fft.hpp"
#include "pvdamp/sampling.hpp"

using namespace pvdamp;
using namespace pvdamp::testing;

namespace {

MultiCoilArray masked_kspace(const ComplexImage& x, const CoilSet& coils, const RealImage& mask) {
  return forward(x, coils, mask);
}

// Literal evaluation of the aliasing formula with the explicit Psi F^H matrix:
// tau_j = s_j^H ( sum_i |PsiHat_ji|^2 [ ((1-p_i)/p_i) y_i y_i^H + Sigma ] m_i / p_i ) s_j
// with s_j = conj(xi_j) the local coil sensitivities, i.e. the variance of sum_c conj(S_c) y_c.
std::vector<double> literal_tau(const MultiCoilArray& y, const RealImage& mask, const RealImage& p,
                                const Eigen::MatrixXcd& sigma, const XiMap& xi, int levels) {
  const int rows = y.rows(), cols = y.cols(), n = rows * cols, nc = y.coils();
  Eigen::MatrixXd mag2 =
      (dwt_matrix(rows, cols, levels).cast<cplx>() * dft_matrix_2d(rows, cols).adjoint()).cwiseAbs2();
  std::vector<double> tau(n);
  for (int j = 0; j < n; ++j) {
    Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(nc, nc);
    for (int i = 0; i < n; ++i) {
      if (mask[i] == 0.0) continue;
      Eigen::VectorXcd yi(nc);
      for (int c = 0; c < nc; ++c) yi(c) = y.at(c, i);
      m += mag2(j, i) * (((1.0 - p[i]) / p[i]) * yi * yi.adjoint() + sigma) * (mask[i] / p[i]);
    }
    Eigen::VectorXcd x(nc);
    for (int c = 0; c < nc; ++c) x(c) = std::conj(xi(c, j));
    tau[j] = (x.adjoint() * m * x)(0, 0).real();
  }
  return tau;
}

}  // namespace

TEST_CASE("full sampling without noise predicts no aliasing") {
  auto coils = simulate_sensitivities(16, 16, 3, 1);
  auto model = make_aliasing_model(coils, 2);
  RealImage ones(16, 16, 1.0);
  auto y = masked_kspace(random_image(16, 16, 2), coils, ones);
  auto tau = tau_update(y, ones, ones, NoiseCov::zeros(3), model);
  for (double t : tau.tau) CHECK(t == 0.0);
}

TEST_CASE("single flat coil reduces to the single-coil per-coefficient formula") {
  const int size = 16, levels = 2;
  CoilSet flat{MultiCoilArray(1, size, size, std::vector<cplx>(size * size, cplx(1.0, 0.0)))};
  auto model = make_aliasing_model(flat, levels);
  auto density = make_density(size, size, {.acceleration = 3.0, .calib_rows = 4, .calib_cols = 4});
  auto mask = draw_mask(density, 5);
  auto y = masked_kspace(random_image(size, size, 6), flat, mask.m);
  auto tau = tau_update(y, mask.m, density.p, NoiseCov::zeros(1), model);

  Eigen::MatrixXd mag2 =
      (dwt_matrix(size, size, levels).cast<cplx>() * dft_matrix_2d(size, size).adjoint()).cwiseAbs2();
  double scale = 0.0;
  for (double t : tau.tau) scale = std::max(scale, t);
  for (int j = 0; j < size * size; ++j) {
    double expected = 0.0;
    for (int i = 0; i < size * size; ++i) {
      const double p = density.p[i];
      expected += mag2(j, i) * ((1.0 - p) / (p * p)) * mask.m[i] * std::norm(y.at(0, i));
    }
    CHECK(std::abs(tau.tau[j] - expected) <= 1e-8 * scale);
  }
}

TEST_CASE("band moment evaluation matches the literal multi-coil formula") {
  const int size = 16;
  for (int levels : {1, 3}) {
    auto coils = simulate_sensitivities(size, size, 2, 10 + levels);
    auto model = make_aliasing_model(coils, levels);
    auto density = make_density(size, size, {.acceleration = 4.0, .calib_rows = 4, .calib_cols = 4});
    auto mask = draw_mask(density, 30 + levels);
    auto y = masked_kspace(random_image(size, size, 7), coils, mask.m);
    Eigen::MatrixXcd sigma(2, 2);
    sigma << 0.3, cplx(0.05, 0.02), cplx(0.05, -0.02), 0.2;
    NoiseCov noise{sigma, {}};
    auto tau = tau_update(y, mask.m, density.p, noise, model);
    auto expected = literal_tau(y, mask.m, density.p, sigma, model.xi, levels);
    double worst = 0.0, scale = 0.0;
    for (std::size_t j = 0; j < expected.size(); ++j) {
      worst = std::max(worst, std::abs(tau.tau[j] - expected[j]));
      scale = std::max(scale, std::abs(expected[j]));
    }
    CHECK(worst <= 1e-8 * scale);
    CHECK(tau.clamped == 0);
    for (double t : tau.tau) CHECK(t >= 0.0);
  }
}

TEST_CASE("per-location noise family is honoured") {
  auto coils = simulate_sensitivities(16, 16, 2, 3);
  auto model = make_aliasing_model(coils, 2);
  RealImage ones(16, 16, 1.0);
  MultiCoilArray zero(2, 16, 16);
  NoiseCov shared = NoiseCov::white(2, 0.5);
  NoiseCov family{Eigen::MatrixXcd::Zero(2, 2), std::vector<Eigen::MatrixXcd>(256, 0.5 * Eigen::MatrixXcd::Identity(2, 2))};
  auto a = tau_update(zero, ones, ones, shared, model);
  auto b = tau_update(zero, ones, ones, family, model);
  for (std::size_t j = 0; j < a.tau.size(); ++j) CHECK(a.tau[j] == doctest::Approx(b.tau[j]).epsilon(1e-12));
  CHECK(a.mean() > 0.0);
}

TEST_CASE("tau is unbiased over masks (pooled Monte Carlo)") {
  const int size = 16, levels = 2, draws = 600;
  auto coils = simulate_sensitivities(size, size, 2, 4);
  auto model = make_aliasing_model(coils, levels);
  auto density = make_density(size, size, {.acceleration = 4.0, .calib_rows = 4, .calib_cols = 4});
  auto x0 = random_image(size, size, 8);
  RealImage full(size, size, 1.0);
  auto y0 = forward(x0, coils, full);
  const double expected = tau_expectation(y0, density.p, NoiseCov::zeros(2), model).mean();
  double sum = 0.0, sum2 = 0.0;
  for (int s = 0; s < draws; ++s) {
    auto mask = draw_mask(density, 500 + s);
    auto y = forward(x0, coils, mask.m);
    const double m = tau_update(y, mask.m, density.p, NoiseCov::zeros(2), model).mean();
    sum += m;
    sum2 += m * m;
  }
  const double mean = sum / draws;
  const double se = std::sqrt((sum2 / draws - mean * mean) / (draws - 1));
  CHECK(std::abs(mean - expected) <= 3.0 * se);
}

TEST_CASE("tau rejects sampled locations with zero probability") {
  auto coils = simulate_sensitivities(16, 16, 1, 3);
  auto model = make_aliasing_model(coils, 2);
  RealImage ones(16, 16, 1.0), p(16, 16, 0.5);
  p[17] = 0.0;
  CHECK_THROWS_AS(tau_update(MultiCoilArray(1, 16, 16), ones, p, NoiseCov::zeros(1), model), ValidationError);
}

TEST_CASE("noise covariance validation") {
  Eigen::MatrixXcd bad(2, 2);
  bad << 1.0, cplx(0.5, 0.0), cplx(0.2, 0.0), 1.0;
  CHECK_THROWS_AS((NoiseCov{bad, {}}.validate()), ValidationError);
  Eigen::MatrixXcd indefinite(2, 2);
  indefinite << 1.0, 2.0, 2.0, 1.0;
  CHECK_THROWS_AS((NoiseCov{indefinite, {}}.validate()), ValidationError);
  CHECK_NOTHROW(NoiseCov::white(3, 0.1).validate());
}

TEST_CASE("empirical error and normalized residual") {
  SubbandMap map(16, 16, 2);
  WaveletCoeffs w{std::vector<cplx>(map.size()), map};
  for (std::size_t j = 0; j < w.data.size(); ++j) w.data[j] = cplx(std::sin(j * 0.3), std::cos(j * 0.7));
  auto same = empirical_error(w, w);
  for (double e : same.per_coefficient) CHECK(e == 0.0);

  WaveletCoeffs r = w;
  const cplx delta(0.3, -0.4);
  for (auto& v : r.data) v += delta;
  auto err = empirical_error(r, w);
  for (double e : err.per_coefficient) CHECK(e == doctest::Approx(0.25));
  for (double e : err.band_means) CHECK(e == doctest::Approx(0.25));

  WaveletCoeffs r1 = w;
  for (auto& v : r1.data) v += 1.0;
  TauMap unit{std::vector<double>(map.size(), 1.0), map, 0};
  auto eta = normalized_residual(r1, w, unit);
  for (std::size_t j = 0; j < eta.eta.size(); ++j) {
    CHECK(eta.included[j]);
    CHECK(std::abs(eta.eta[j] - cplx(1.0, 0.0)) < 1e-12);
  }
  WaveletCoeffs r2 = w;
  for (auto& v : r2.data) v += 2.0;
  auto eta2 = normalized_residual(r2, w, unit);
  for (std::size_t j = 0; j < eta.eta.size(); ++j) CHECK(std::abs(eta2.eta[j] - 2.0 * eta.eta[j]) < 1e-12);

  TauMap partial = unit;
  partial.tau[3] = 1e-20;
  partial.tau[4] = 0.0;
  auto eta3 = normalized_residual(r1, w, partial);
  CHECK_FALSE(eta3.included[3]);
  CHECK_FALSE(eta3.included[4]);
  CHECK(eta3.included[5]);

  auto summary = tau_band_summary(unit);
  CHECK(summary.size() == 7);
  CHECK(summary[0]["orientation"] == "LL");
  CHECK(summary[0]["mean_tau"] == 1.0);
}
