#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "oracles.hpp"
#include "pvdamp/data.hpp"
#include "pvdamp/eval.hpp"
#include "pvdamp/fft.hpp"
#include "pvdamp/sampling.hpp"
#include "pvdamp/solver.hpp"

using namespace pvdamp;
using namespace pvdamp::testing;

namespace {

struct Problem {
  ComplexImage x0;
  CoilSet coils;
  DensityMap density;
  SamplingMask mask;
  NoiseCov noise;
  MultiCoilArray y;
};

Problem make_problem(int n, int n_coils, double accel, double snr_db, std::uint64_t seed,
                     PhantomKind kind = PhantomKind::ellipses) {
  Problem p;
  p.x0 = make_phantom(n, n, seed, kind).x0;
  p.coils = simulate_sensitivities(n, n, n_coils, seed + 1);
  p.density = make_density(n, n, {.acceleration = accel, .calib_rows = n / 8, .calib_cols = n / 8});
  p.mask = draw_mask(p.density, seed + 2);
  p.noise = snr_db > 0.0 ? make_noise_cov(n_coils, snr_db, seed + 3, signal_power(p.x0, p.coils)).cov
                         : NoiseCov::zeros(n_coils);
  p.y = acquire(p.x0, p.coils, p.mask.m, p.noise, seed + 4);
  return p;
}

CoilSet flat_coil(int n) { return CoilSet{MultiCoilArray(1, n, n, std::vector<cplx>(n * n, cplx(1.0, 0.0)))}; }

double relative_error(const ComplexImage& a, const ComplexImage& b) {
  double e = 0.0, s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    e += std::norm(a[i] - b[i]);
    s += std::norm(b[i]);
  }
  return std::sqrt(e / s);
}

}  // namespace

TEST_CASE("zero-filled estimate") {
  SUBCASE("full sampling without noise is exact") {
    auto x0 = make_phantom(32, 32, 3).x0;
    auto coils = simulate_sensitivities(32, 32, 3, 4);
    RealImage full(32, 32, 1.0);
    auto y = acquire(x0, coils, full, NoiseCov::zeros(3), 0);
    CHECK(max_abs_diff(zero_filled(y, full, full, coils).span(), x0.span()) < 1e-10);
  }
  SUBCASE("single flat coil is the P^-1 weighted inverse FFT") {
    auto x0 = make_phantom(16, 16, 5).x0;
    auto density = make_density(16, 16, {.acceleration = 3.0, .calib_rows = 4, .calib_cols = 4});
    auto mask = draw_mask(density, 6);
    auto y = acquire(x0, flat_coil(16), mask.m, NoiseCov::zeros(1), 0);
    ComplexImage k = fft2c(x0);
    for (std::size_t i = 0; i < k.size(); ++i) k[i] *= mask.m[i] / density.p[i];
    CHECK(max_abs_diff(zero_filled(y, mask.m, density.p, flat_coil(16)).span(), ifft2c(k).span()) < 1e-12);
  }
  SUBCASE("unbiased over masks") {
    const int n = 16, draws = 400;
    auto x0 = make_phantom(n, n, 8).x0;
    auto coils = simulate_sensitivities(n, n, 2, 9);
    auto density = make_density(n, n, {.acceleration = 4.0, .calib_rows = 4, .calib_cols = 4});
    std::vector<cplx> sum(x0.size());
    std::vector<double> sum2(x0.size());
    for (int d = 0; d < draws; ++d) {
      auto mask = draw_mask(density, 1000 + d);
      auto y = acquire(x0, coils, mask.m, NoiseCov::zeros(2), 0);
      auto x = zero_filled(y, mask.m, density.p, coils);
      for (std::size_t i = 0; i < x.size(); ++i) {
        sum[i] += x[i];
        sum2[i] += std::norm(x[i]);
      }
    }
    int within = 0;
    for (std::size_t i = 0; i < x0.size(); ++i) {
      const cplx mean = sum[i] / static_cast<double>(draws);
      const double var = sum2[i] / draws - std::norm(mean);
      const double se = std::sqrt(std::max(var, 0.0) / draws);
      if (std::abs(mean - x0[i]) <= 3.0 * se + 1e-12) ++within;
    }
    CHECK(within >= static_cast<int>(0.97 * x0.size()));
  }
  SUBCASE("rejects zero probability at a sampled location and data off the mask") {
    auto p = make_problem(16, 2, 3.0, 0.0, 11);
    RealImage bad = p.density.p;
    for (std::size_t i = 0; i < bad.size(); ++i)
      if (p.mask.m[i] == 1.0) {
        bad[i] = 0.0;
        break;
      }
    CHECK_THROWS_AS(zero_filled(p.y, p.mask.m, bad, p.coils), ValidationError);
    MultiCoilArray off = p.y;
    for (std::size_t i = 0; i < p.mask.m.size(); ++i)
      if (p.mask.m[i] == 0.0) {
        off.at(0, i) = cplx(1.0, 0.0);
        break;
      }
    CHECK_THROWS_AS(zero_filled(off, p.mask.m, p.density.p, p.coils), ValidationError);
  }
}

TEST_CASE("Onsager correction") {
  SubbandMap map(8, 8, 1);
  auto r = WaveletCoeffs{random_image(8, 8, 1).values(), map};
  auto w = WaveletCoeffs{random_image(8, 8, 2).values(), map};
  std::vector<double> alpha{0.25, 0.0, 0.5, 0.9};
  std::vector<double> t{1.0, 1.0, 1.0, 1.0};
  auto out = onsager_correct(w, r, alpha, t);
  for (const auto& b : map.bands())
    for (std::size_t j = b.offset; j < b.end(); ++j) {
      const double a = alpha[b.id];
      CHECK(std::abs(out.data[j] - (w.data[j] - a * r.data[j]) / (1.0 - a)) < 1e-12);
    }
  // Identity band passes through; a thresholding band with alpha ~ 1 is degenerate.
  alpha[2] = 1.0;
  t[2] = 0.0;
  out = onsager_correct(w, r, alpha, t);
  for (std::size_t j = map.band(2).offset; j < map.band(2).end(); ++j) CHECK(out.data[j] == w.data[j]);
  t[2] = 0.5;
  CHECK_THROWS_AS(onsager_correct(w, r, alpha, t), NumericalError);
  alpha[2] = 1.0 - 1e-10;
  CHECK_THROWS_AS(onsager_correct(w, r, alpha, t), NumericalError);
}

TEST_CASE("P-VDAMP fully sampled without noise") {
  auto x0 = make_phantom(32, 32, 12).x0;
  auto coils = simulate_sensitivities(32, 32, 3, 13);
  RealImage full(32, 32, 1.0);
  auto y = acquire(x0, coils, full, NoiseCov::zeros(3), 0);
  for (auto mode : {OutputMode::pvdamp, OutputMode::unbiased}) {
    SolverConfig cfg;
    cfg.output_mode = mode;
    auto res = solve_pvdamp(y, full, full, coils, NoiseCov::zeros(3), cfg);
    CHECK(max_abs_diff(res.x_hat.span(), x0.span()) < 1e-8);
    REQUIRE(res.trace.records.size() == 2);
    CHECK(res.trace.records[0].mean_tau == 0.0);
    CHECK(res.trace.records[1].k == 1);
    CHECK(res.stop_reason == StopReason::tau_plateau);
    CHECK(res.iterations_run == 2);
  }
}

TEST_CASE("P-VDAMP k = 0 state is the zero-filled estimate") {
  auto p = make_problem(32, 3, 4.0, 30.0, 21);
  WaveletCoeffs r0;
  SolveHooks hooks;
  hooks.observer = [&](const IterateView& v) {
    if (v.k == 0) r0 = v.r;
  };
  SolverConfig cfg;
  cfg.max_iters = 1;
  auto res = solve_pvdamp(p.y, p.mask.m, p.density.p, p.coils, p.noise, cfg, hooks);
  CHECK(res.stop_reason == StopReason::max_iters);
  CHECK(res.iterations_run == 1);
  auto expected = dwt2(zero_filled(p.y, p.mask.m, p.density.p, p.coils), cfg.levels);
  CHECK(max_abs_diff(r0.data, expected.data) < 1e-12);
}

TEST_CASE("undamped path equals the plain recursion") {
  auto p = make_problem(32, 4, 3.0, 40.0, 31);
  SolverConfig cfg;
  cfg.rho = 1.0;
  cfg.max_iters = 3;
  cfg.eps_stop = 1e-12;
  std::vector<WaveletCoeffs> seen_r, seen_w;
  SolveHooks hooks;
  hooks.observer = [&](const IterateView& v) {
    seen_r.push_back(v.r);
    seen_w.push_back(v.w_hat);
  };
  auto res = solve_pvdamp(p.y, p.mask.m, p.density.p, p.coils, p.noise, cfg, hooks);

  // Reference: the recursion written out directly, no damping.
  const AliasingModel model = make_aliasing_model(p.coils, cfg.levels);
  WaveletCoeffs r_tilde{std::vector<cplx>(model.map.size()), model.map};
  std::vector<WaveletCoeffs> ref_r, ref_w;
  std::vector<double> ref_tau;
  for (int k = 0; k < 3; ++k) {
    MultiCoilArray z = forward(idwt2(r_tilde), p.coils, p.mask.m);
    for (std::size_t i = 0; i < z.size(); ++i) z.values()[i] = p.y.values()[i] - z.values()[i];
    WaveletCoeffs r = dwt2(adjoint_compensated(z, p.coils, p.density.p), cfg.levels);
    for (std::size_t j = 0; j < r.data.size(); ++j) r.data[j] += r_tilde.data[j];
    const TauMap tau = tau_update(z, p.mask.m, p.density.p, p.noise, model);
    const SureDenoise den = sure_denoise(r, tau.tau, cfg.denoiser_mode);
    ref_r.push_back(r);
    ref_w.push_back(den.result.w_hat);
    ref_tau.push_back(tau.mean());
    r_tilde = onsager_correct(den.result.w_hat, r, den.result.alpha, den.thresholds.t);
  }

  REQUIRE(seen_r.size() == 3);
  CHECK(res.stop_reason == StopReason::max_iters);
  for (std::size_t k = 0; k < seen_r.size(); ++k) {
    CHECK(seen_r[k].data == ref_r[k].data);
    CHECK(seen_w[k].data == ref_w[k].data);
    CHECK(res.trace.records[k].mean_tau == ref_tau[k]);
  }
}

TEST_CASE("damping mixes the denoiser with the previous estimate") {
  auto p = make_problem(32, 4, 3.0, 40.0, 41);
  SolverConfig cfg;
  cfg.rho = 0.6;
  cfg.max_iters = 4;
  cfg.eps_stop = 1e-12;
  std::vector<WaveletCoeffs> seen_w;
  std::vector<std::vector<double>> seen_alpha;
  std::vector<SureDenoise> undamped;
  SolveHooks hooks;
  hooks.observer = [&](const IterateView& v) {
    seen_w.push_back(v.w_hat);
    seen_alpha.push_back(v.record.alpha);
    undamped.push_back(sure_denoise(v.r, v.tau.tau, cfg.denoiser_mode));
  };
  solve_pvdamp(p.y, p.mask.m, p.density.p, p.coils, p.noise, cfg, hooks);
  REQUIRE(!seen_w.empty());
  CHECK(seen_w[0].data == undamped[0].result.w_hat.data);
  CHECK(seen_alpha[0] == undamped[0].result.alpha);
  for (std::size_t k = 1; k < seen_w.size(); ++k) {
    for (std::size_t j = 0; j < seen_w[k].data.size(); ++j)
      CHECK(std::abs(seen_w[k].data[j] -
                     (0.6 * undamped[k].result.w_hat.data[j] + 0.4 * seen_w[k - 1].data[j])) < 1e-14);
    for (std::size_t b = 0; b < seen_alpha[k].size(); ++b)
      CHECK(seen_alpha[k][b] == doctest::Approx(0.6 * undamped[k].result.alpha[b]).epsilon(1e-15));
  }
}

TEST_CASE("P-VDAMP stopping and outputs") {
  auto p = make_problem(32, 4, 4.0, 30.0, 51, PhantomKind::blobs_and_vessels);
  auto res = solve_pvdamp(p.y, p.mask.m, p.density.p, p.coils, p.noise);
  const auto& recs = res.trace.records;
  REQUIRE(!recs.empty());
  for (std::size_t k = 1; k < recs.size(); ++k) CHECK(recs[k].mean_tau < recs[k - 1].mean_tau);
  CHECK(res.iterations_run <= 50);
  if (res.stop_reason == StopReason::tau_rise) CHECK(res.iterations_run == static_cast<int>(recs.size()));
  if (res.stop_reason == StopReason::tau_plateau) {
    const double a = recs[recs.size() - 2].mean_tau, b = recs.back().mean_tau;
    CHECK(std::abs(b - a) / a < 1e-3);
  }

  // pvdamp output: one plain gradient step from the denoised estimate.
  const ComplexImage xw = idwt2(res.w_hat);
  MultiCoilArray z = forward(xw, p.coils, p.mask.m);
  for (std::size_t i = 0; i < z.size(); ++i) z.values()[i] = p.y.values()[i] - z.values()[i];
  ComplexImage expected = adjoint(z, p.coils);
  for (std::size_t i = 0; i < expected.size(); ++i) expected[i] += xw[i];
  CHECK(max_abs_diff(res.x_hat.span(), expected.span()) < 1e-12);

  SolverConfig cfg;
  cfg.output_mode = OutputMode::unbiased;
  auto unb = solve_pvdamp(p.y, p.mask.m, p.density.p, p.coils, p.noise, cfg);
  CHECK(unb.iterations_run == res.iterations_run);
  CHECK(max_abs_diff(unb.x_hat.span(), idwt2(unb.r).span()) < 1e-12);

  // The trace carries per-band entries and serializes.
  CHECK(recs[0].band_tau.size() == 13);
  CHECK(recs[0].thresholds.size() == 13);
  auto j = res.trace.record_json(0);
  CHECK(j["k"] == 0);
  CHECK(j.contains("alpha"));
  CHECK(res.trace.to_csv().rfind("k,mean_tau", 0) == 0);
}

TEST_CASE("P-VDAMP configuration errors") {
  auto p = make_problem(16, 2, 3.0, 30.0, 61);
  SolverConfig cfg;
  cfg.rho = 0.0;
  CHECK_THROWS_AS(solve_pvdamp(p.y, p.mask.m, p.density.p, p.coils, p.noise, cfg), ValidationError);
  cfg.rho = 1.5;
  CHECK_THROWS_AS(solve_pvdamp(p.y, p.mask.m, p.density.p, p.coils, p.noise, cfg), ValidationError);
  cfg = {};
  cfg.eps_stop = 0.0;
  CHECK_THROWS_AS(solve_pvdamp(p.y, p.mask.m, p.density.p, p.coils, p.noise, cfg), ValidationError);
  CHECK_THROWS_AS(solve_pvdamp(p.y, p.mask.m, p.density.p, p.coils, NoiseCov::zeros(3)), ValidationError);
  RealImage bad = p.density.p;
  for (std::size_t i = 0; i < bad.size(); ++i)
    if (p.mask.m[i] == 1.0) bad[i] = 0.0;
  CHECK_THROWS_AS(solve_pvdamp(p.y, p.mask.m, bad, p.coils, p.noise), ValidationError);
}

TEST_CASE("FISTA") {
  SUBCASE("lambda = 0 with full sampling recovers the image") {
    auto x0 = make_phantom(32, 32, 71).x0;
    auto coils = simulate_sensitivities(32, 32, 3, 72);
    RealImage full(32, 32, 1.0);
    auto y = acquire(x0, coils, full, NoiseCov::zeros(3), 0);
    auto res = fista(y, full, coils, 0.0);
    CHECK(max_abs_diff(res.x_hat.span(), x0.span()) < 1e-10);
    CHECK(res.stop_reason == StopReason::iterate_plateau);
  }
  SUBCASE("objective never increases") {
    auto p = make_problem(32, 4, 4.0, 25.0, 73);
    const double lambda = 0.3 * fista_lambda_heuristic(p.y, p.mask.m, p.density.p, p.coils);
    SolverConfig cfg = SolverConfig::fista_defaults();
    cfg.eps_stop = 1e-300;
    auto res = fista(p.y, p.mask.m, p.coils, lambda, cfg);
    REQUIRE(res.trace.records.size() == 200);
    const double f0 = fista_objective(ComplexImage(32, 32), p.y, p.mask.m, p.coils, lambda, cfg.levels);
    CHECK(res.trace.records[0].objective <= f0 + 1e-10);
    for (std::size_t k = 1; k < res.trace.records.size(); ++k)
      CHECK(res.trace.records[k].objective <= res.trace.records[k - 1].objective + 1e-10);
    CHECK(fista_objective(res.x_hat, p.y, p.mask.m, p.coils, lambda, cfg.levels) ==
          doctest::Approx(res.trace.records.back().objective).epsilon(1e-12));
  }
  SUBCASE("huge lambda gives zero") {
    auto p = make_problem(32, 2, 4.0, 30.0, 75);
    auto res = fista(p.y, p.mask.m, p.coils, 1e6);
    CHECK(max_abs(res.x_hat.span()) == 0.0);
  }
  SUBCASE("negative lambda is rejected") {
    auto p = make_problem(16, 2, 3.0, 30.0, 77);
    CHECK_THROWS_AS(fista(p.y, p.mask.m, p.coils, -1.0), ValidationError);
  }
}

TEST_CASE("FISTA lambda tuning") {
  auto p = make_problem(32, 3, 4.0, 30.0, 81);
  const double lambda0 = fista_lambda_heuristic(p.y, p.mask.m, p.density.p, p.coils);
  auto w = dwt2(zero_filled(p.y, p.mask.m, p.density.p, p.coils), kDefaultLevels);
  std::vector<double> mags;
  for (const auto& v : w.data) mags.push_back(std::abs(v));
  std::sort(mags.begin(), mags.end());
  CHECK(lambda0 == mags[mags.size() / 2]);

  auto grid = default_lambda_grid(lambda0);
  REQUIRE(grid.size() == 15);
  CHECK(grid.front() == doctest::Approx(lambda0 * 1e-2));
  CHECK(grid[7] == doctest::Approx(lambda0));
  CHECK(grid.back() == doctest::Approx(lambda0 * 1e2));
  CHECK_THROWS_AS(default_lambda_grid(0.0), ValidationError);

  auto single = tune_fista_lambda(p.y, p.mask.m, p.coils, p.x0, {0.5 * lambda0});
  CHECK(single.lambda_star == 0.5 * lambda0);
  CHECK(single.curve.size() == 1);

  std::vector<double> small_grid{lambda0 * 1e-3, lambda0 * 1e-2, lambda0 * 1e-1, lambda0};
  auto tuned = tune_fista_lambda(p.y, p.mask.m, p.coils, p.x0, small_grid);
  REQUIRE(tuned.curve.size() == small_grid.size());
  double best = 1e300;
  for (const auto& [lam, e] : tuned.curve) best = std::min(best, e);
  const RealImage support = support_mask(p.x0);
  CHECK(nmse_db(tuned.result.x_hat, p.x0, support) == best);
  for (const auto& [lam, e] : tuned.curve) CHECK(nmse_db(tuned.result.x_hat, p.x0, support) <= e);
}

TEST_CASE("SURE-IT") {
  SUBCASE("white variance from the finest diagonal band") {
    SubbandMap map(64, 64, 2);
    WaveletCoeffs w{std::vector<cplx>(map.size()), map};
    std::mt19937_64 rng(5);
    for (auto& v : w.band(map.find(Orientation::HH, 1).id)) v = complex_gaussian(rng, 0.3);
    CHECK(white_variance_mad(w) == doctest::Approx(0.3).epsilon(0.1));
    for (auto& v : w.band(map.find(Orientation::HH, 1).id)) v = cplx(0.6745, -0.6745);
    CHECK(white_variance_mad(w) == doctest::Approx(2.0));
  }
  SUBCASE("noiseless full sampling converges to the image") {
    auto x0 = make_phantom(32, 32, 91).x0;
    auto coils = simulate_sensitivities(32, 32, 2, 92);
    RealImage full(32, 32, 1.0);
    auto y = acquire(x0, coils, full, NoiseCov::zeros(2), 0);
    auto res = sure_it(y, full, coils);
    CHECK(nmse_db(res.x_hat, x0, support_mask(x0)) < -30.0);
  }
  SUBCASE("first step is the denoiser tuned under a white model") {
    auto p = make_problem(32, 3, 4.0, 30.0, 93);
    SolverConfig cfg = SolverConfig::fista_defaults();
    cfg.max_iters = 1;
    auto res = sure_it(p.y, p.mask.m, p.coils, cfg);
    auto w = dwt2(adjoint(p.y, p.coils), cfg.levels);
    const double s2 = white_variance_mad(w);
    auto den = sure_denoise(w, std::vector<double>(w.data.size(), s2));
    CHECK(res.w_hat.data == den.result.w_hat.data);
    CHECK(res.trace.records[0].mean_tau == s2);
    CHECK(relative_error(res.x_hat, idwt2(den.result.w_hat)) < 1e-14);
  }
}
