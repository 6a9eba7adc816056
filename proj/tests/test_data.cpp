#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "oracles.hpp"
#include "pvdamp/data.hpp"
#include "pvdamp/fft.hpp"
#include "pvdamp/sampling.hpp"

using namespace pvdamp;
using namespace pvdamp::testing;

namespace {

double top_fraction_energy(const ComplexImage& x, double fraction) {
  auto w = dwt2(x, 4);
  std::vector<double> e;
  for (const auto& v : w.data) e.push_back(std::norm(v));
  std::sort(e.rbegin(), e.rend());
  double total = 0.0, top = 0.0;
  const std::size_t keep = static_cast<std::size_t>(fraction * e.size());
  for (std::size_t i = 0; i < e.size(); ++i) {
    total += e[i];
    if (i < keep) top += e[i];
  }
  return top / total;
}

}  // namespace

TEST_CASE("phantoms") {
  for (auto kind : {PhantomKind::ellipses, PhantomKind::blobs_and_vessels}) {
    auto a = make_phantom(64, 64, 7, kind);
    auto b = make_phantom(64, 64, 7, kind);
    auto c = make_phantom(64, 64, 8, kind);
    CHECK(a.x0 == b.x0);
    CHECK_FALSE(a.x0 == c.x0);
    CHECK(max_abs(a.x0.span()) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(a.descriptor["kind"] == phantom_kind_name(kind));
    CHECK(a.descriptor["seed"] == 7);
    // Complex-valued: a non-trivial phase map.
    double max_im = 0.0;
    for (const auto& v : a.x0.values()) max_im = std::max(max_im, std::abs(v.imag()));
    CHECK(max_im > 0.05);
  }
  for (std::uint64_t seed : {1, 7, 19, 42}) {
    auto p = make_phantom(64, 64, seed, PhantomKind::ellipses);
    CHECK(top_fraction_energy(p.x0, 0.10) >= 0.95);
  }
  // Vessels add fine structure: a larger share of finest-scale energy than the ellipse base.
  auto base = make_phantom(64, 64, 3, PhantomKind::ellipses);
  auto vessels = make_phantom(64, 64, 3, PhantomKind::blobs_and_vessels);
  auto finest_energy = [](const ComplexImage& x) {
    auto w = dwt2(x, 4);
    double e = 0.0, total = 0.0;
    for (int o : {1, 2, 3})
      for (const auto& v : w.band(o)) e += std::norm(v);
    for (const auto& v : w.data) total += std::norm(v);
    return e / total;
  };
  CHECK(finest_energy(vessels.x0) > finest_energy(base.x0));
  CHECK_THROWS_AS(make_phantom(6, 64, 1), ValidationError);
  CHECK_THROWS_AS(parse_phantom_kind("shepp"), ValidationError);
}

TEST_CASE("noise covariance construction") {
  auto spec = make_noise_cov(4, 20.0, 5, 1.0);
  CHECK(spec.c * spec.c == doctest::Approx(0.01));
  CHECK((spec.cov.shared - 0.01 * Eigen::MatrixXcd::Identity(4, 4)).cwiseAbs().maxCoeff() < 1e-15);
  for (const auto& v : spec.v) CHECK(std::abs(v) == doctest::Approx(spec.c));
  auto again = make_noise_cov(4, 20.0, 5, 1.0);
  CHECK(again.v == spec.v);

  auto one = make_noise_cov(1, 10.0, 2, 4.0);
  CHECK(one.cov.shared(0, 0).real() == doctest::Approx(0.4));

  auto corr = make_noise_cov(3, 30.0, 9, 2.0, NoiseModel::correlated);
  CHECK_NOTHROW(corr.cov.validate());
  const double c2 = corr.c * corr.c;
  CHECK(corr.cov.shared(0, 0).real() == doctest::Approx(1.01 * c2));
  CHECK(std::abs(corr.cov.shared(0, 1) - corr.v[0] * std::conj(corr.v[1])) < 1e-15);

  CHECK_THROWS_AS(make_noise_cov(2, 0.0, 1, 1.0), ValidationError);
  CHECK_THROWS_AS(make_noise_cov(2, -5.0, 1, 1.0), ValidationError);
  CHECK(make_noise_cov(2, 10.0, 1, 1.0).to_json()["model"] == "diagonal");
}

TEST_CASE("acquisition") {
  SUBCASE("noiseless, full mask, flat coil gives the FFT") {
    auto x0 = make_phantom(32, 32, 1).x0;
    CoilSet flat{MultiCoilArray(1, 32, 32, std::vector<cplx>(1024, cplx(1.0, 0.0)))};
    auto y = acquire(x0, flat, RealImage(32, 32, 1.0), NoiseCov::zeros(1), 3);
    CHECK(max_abs_diff(y.coil(0), fft2c(x0).span()) < 1e-14);
  }
  SUBCASE("masked entries are exactly zero and draws are seeded") {
    auto x0 = make_phantom(32, 32, 2).x0;
    auto coils = simulate_sensitivities(32, 32, 3, 4);
    auto density = make_density(32, 32, {.acceleration = 4.0});
    auto mask = draw_mask(density, 8);
    auto noise = make_noise_cov(3, 20.0, 1, signal_power(x0, coils)).cov;
    auto y = acquire(x0, coils, mask.m, noise, 11);
    for (int c = 0; c < 3; ++c)
      for (std::size_t i = 0; i < y.pixels(); ++i)
        if (mask.m[i] == 0.0) CHECK(y.at(c, i) == cplx(0.0, 0.0));
    CHECK(acquire(x0, coils, mask.m, noise, 11).values() == y.values());
    CHECK_FALSE(acquire(x0, coils, mask.m, noise, 12).values() == y.values());
  }
  SUBCASE("empirical noise covariance matches") {
    const int draws = 5000;
    auto spec = make_noise_cov(3, 10.0, 6, 1.0, NoiseModel::correlated);
    CoilSet coils = simulate_sensitivities(8, 8, 3, 1);
    ComplexImage zero(8, 8);
    RealImage full(8, 8, 1.0);
    Eigen::MatrixXcd acc = Eigen::MatrixXcd::Zero(3, 3);
    std::size_t n = 0;
    for (int d = 0; d < draws; ++d) {
      auto y = acquire(zero, coils, full, spec.cov, 1000 + d);
      const std::size_t i = static_cast<std::size_t>(d) % y.pixels();
      Eigen::VectorXcd e(3);
      for (int c = 0; c < 3; ++c) e(c) = y.at(c, i);
      acc += e * e.adjoint();
      ++n;
    }
    acc /= static_cast<double>(n);
    const double scale = spec.cov.shared.cwiseAbs().maxCoeff();
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) CHECK(std::abs(acc(a, b) - spec.cov.shared(a, b)) <= 0.05 * scale);
  }
  SUBCASE("empirical SNR matches the request") {
    auto x0 = make_phantom(64, 64, 7).x0;
    auto coils = simulate_sensitivities(64, 64, 4, 2);
    const double power = signal_power(x0, coils);
    for (double snr : {10.0, 20.0, 30.0}) {
      auto spec = make_noise_cov(4, snr, 3, power);
      RealImage full(64, 64, 1.0);
      auto clean = acquire(x0, coils, full, NoiseCov::zeros(4), 0);
      auto noisy = acquire(x0, coils, full, spec.cov, 21);
      double s = 0.0, e = 0.0;
      for (std::size_t i = 0; i < clean.size(); ++i) {
        s += std::norm(clean.values()[i]);
        e += std::norm(noisy.values()[i] - clean.values()[i]);
      }
      CHECK(s / e == doctest::Approx(std::pow(10.0, snr / 10.0)).epsilon(0.02));
    }
  }
}
