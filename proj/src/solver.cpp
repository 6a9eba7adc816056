#include "pvdamp/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>

#include "pvdamp/errors.hpp"
#include "pvdamp/eval.hpp"

namespace pvdamp {

const char* output_mode_name(OutputMode mode) { return mode == OutputMode::pvdamp ? "pvdamp" : "unbiased"; }

const char* stop_reason_name(StopReason reason) {
  switch (reason) {
    case StopReason::tau_rise: return "tau_rise";
    case StopReason::tau_plateau: return "tau_plateau";
    case StopReason::max_iters: return "max_iters";
    case StopReason::iterate_plateau: return "iterate_plateau";
  }
  return "unknown";
}

SolverConfig SolverConfig::fista_defaults() {
  SolverConfig cfg;
  cfg.max_iters = 200;
  return cfg;
}

void SolverConfig::validate() const {
  require(rho > 0.0 && rho <= 1.0, "damping rho must be in (0, 1]");
  require(eps_stop > 0.0 && std::isfinite(eps_stop), "stopping tolerance must be positive");
  require(max_iters >= 1, "max_iters must be at least 1");
  require(levels >= 1 && levels <= kMaxLevels, "wavelet levels must be in [1, 6]");
}

nlohmann::json SolverConfig::to_json() const {
  return {{"rho", rho},
          {"eps_stop", eps_stop},
          {"max_iters", max_iters},
          {"levels", levels},
          {"output_mode", output_mode_name(output_mode)},
          {"denoiser_mode", denoiser_mode_name(denoiser_mode)}};
}

nlohmann::json IterateTrace::record_json(std::size_t k) const {
  const auto& r = records.at(k);
  nlohmann::json j = {{"k", r.k},           {"mean_tau", r.mean_tau}, {"band_tau", r.band_tau},
                      {"t", r.thresholds},  {"alpha", r.alpha},       {"csure", r.csure},
                      {"seconds", r.seconds}};
  if (r.nmse_db) j["nmse_db"] = *r.nmse_db;
  if (r.objective != 0.0) j["objective"] = r.objective;
  return j;
}

std::string IterateTrace::to_csv() const {
  std::ostringstream out;
  out.precision(10);
  out << "k,mean_tau,nmse_db,objective,seconds\n";
  for (const auto& r : records) {
    out << r.k << ',' << r.mean_tau << ',';
    if (r.nmse_db) out << *r.nmse_db;
    out << ',' << r.objective << ',' << r.seconds << '\n';
  }
  return out.str();
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

void require_problem(const MultiCoilArray& y, const RealImage& mask, const CoilSet& coils) {
  require_image_shape(y.rows(), y.cols());
  require(mask.rows() == y.rows() && mask.cols() == y.cols(), "mask and k-space shapes differ");
  require(coils.coils() == y.coils(), "k-space and coil maps have different coil counts");
  require(coils.rows() == y.rows() && coils.cols() == y.cols(), "k-space and coil maps have different shapes");
  require(all_finite(y.values()), "k-space contains non-finite values");
  for (int c = 0; c < y.coils(); ++c) {
    auto yc = y.coil(c);
    for (std::size_t i = 0; i < yc.size(); ++i)
      require(mask[i] != 0.0 || yc[i] == cplx{}, "k-space data is nonzero outside the sampling mask");
  }
}

void require_density(const RealImage& mask, const RealImage& density) {
  require(density.same_shape(mask), "density and mask shapes differ");
  for (std::size_t i = 0; i < mask.size(); ++i)
    require(mask[i] == 0.0 || density[i] > 0.0, "sampling probability is zero at a sampled k-space location");
}

// y - M F S x, coil by coil.
MultiCoilArray data_residual(const MultiCoilArray& y, const ComplexImage& x, const CoilSet& coils,
                             const RealImage& mask) {
  MultiCoilArray z = forward(x, coils, mask);
  auto& zv = z.values();
  const auto& yv = y.values();
  for (std::size_t i = 0; i < zv.size(); ++i) zv[i] = yv[i] - zv[i];
  return z;
}

ComplexImage add(const ComplexImage& a, const ComplexImage& b) {
  ComplexImage out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += b[i];
  return out;
}

ComplexImage pvdamp_output(const WaveletCoeffs& w_hat, const WaveletCoeffs& r, OutputMode mode,
                           const MultiCoilArray& y, const RealImage& mask, const CoilSet& coils) {
  if (mode == OutputMode::unbiased) return idwt2(r);
  const ComplexImage x = idwt2(w_hat);
  return add(x, adjoint(data_residual(y, x, coils, mask), coils));
}

void require_finite(const WaveletCoeffs& w, const char* what) {
  if (!all_finite(std::span<const cplx>(w.data))) throw NumericalError(std::string(what) + " became non-finite");
}

}  // namespace

WaveletCoeffs onsager_correct(const WaveletCoeffs& w_hat, const WaveletCoeffs& r, const std::vector<double>& alpha,
                              const std::vector<double>& t) {
  const SubbandMap& map = r.map;
  require(w_hat.map == map && w_hat.data.size() == r.data.size(), "Onsager inputs use different layouts");
  require(static_cast<int>(alpha.size()) == map.band_count() && static_cast<int>(t.size()) == map.band_count(),
          "Onsager needs one alpha and one threshold per band");
  WaveletCoeffs out{std::vector<cplx>(r.data.size()), map};
  for (const auto& b : map.bands()) {
    const double a = alpha[b.id];
    // A band whose denoiser is the identity (t_b = 0, alpha_b = 1) carries its estimate through.
    if (a >= 1.0 - 1e-9) {
      if (t[b.id] != 0.0) throw NumericalError("Onsager denominator degenerate in band " + std::to_string(b.id));
      for (std::size_t j = b.offset; j < b.end(); ++j) out.data[j] = w_hat.data[j];
      continue;
    }
    const double c = 1.0 / (1.0 - a);
    for (std::size_t j = b.offset; j < b.end(); ++j) out.data[j] = c * (w_hat.data[j] - a * r.data[j]);
  }
  return out;
}

ComplexImage zero_filled(const MultiCoilArray& y, const RealImage& mask, const RealImage& density,
                         const CoilSet& coils) {
  require_problem(y, mask, coils);
  require_density(mask, density);
  return adjoint_compensated(y, coils, density);
}

ReconResult solve_pvdamp(const MultiCoilArray& y, const RealImage& mask, const RealImage& density, const CoilSet& coils,
                   const NoiseCov& noise, const SolverConfig& cfg, const SolveHooks& hooks) {
  cfg.validate();
  require_problem(y, mask, coils);
  require_density(mask, density);
  noise.validate();
  require(noise.coils() == y.coils(), "noise covariance and k-space coil counts differ");

  const auto start = Clock::now();
  const AliasingModel model = make_aliasing_model(coils, cfg.levels);
  const SubbandMap& map = model.map;

  ReconResult out;
  WaveletCoeffs r_tilde{std::vector<cplx>(map.size()), map};
  WaveletCoeffs w_prev, r_prev;
  TauMap tau_prev;
  double mean_prev = 0.0;

  auto finish = [&](const WaveletCoeffs& w_hat, const WaveletCoeffs& r, const TauMap& tau, StopReason why,
                    int iterations) {
    out.x_hat = pvdamp_output(w_hat, r, cfg.output_mode, y, mask, coils);
    out.w_hat = w_hat;
    out.r = r;
    out.tau = tau;
    out.stop_reason = why;
    out.iterations_run = iterations;
    return out;
  };

  for (int k = 0; k < cfg.max_iters; ++k) {
    // Density-compensated gradient step.
    const MultiCoilArray z = data_residual(y, idwt2(r_tilde), coils, mask);
    WaveletCoeffs r = dwt2(adjoint_compensated(z, coils, density), cfg.levels);
    for (std::size_t j = 0; j < r.data.size(); ++j) r.data[j] += r_tilde.data[j];
    require_finite(r, "unbiased estimate");

    const TauMap tau = tau_update(z, mask, density, noise, model);
    const double mean_tau = tau.mean();
    if (!std::isfinite(mean_tau)) throw NumericalError("aliasing model became non-finite");

    bool plateau = false;
    if (k > 0) {
      if (mean_tau > mean_prev) return finish(w_prev, r_prev, tau_prev, StopReason::tau_rise, k);
      plateau = mean_prev == 0.0 || std::abs(mean_tau - mean_prev) / mean_prev < cfg.eps_stop;
    }

    const SureDenoise den = sure_denoise(r, tau.tau, cfg.denoiser_mode);
    const DenoiseResult& g = den.result;
    WaveletCoeffs w_hat = g.w_hat;
    std::vector<double> alpha = g.alpha;
    if (k > 0) {
      for (std::size_t j = 0; j < w_hat.data.size(); ++j)
        w_hat.data[j] = cfg.rho * g.w_hat.data[j] + (1.0 - cfg.rho) * w_prev.data[j];
      for (double& a : alpha) a *= cfg.rho;
    }

    IterateRecord rec;
    rec.k = k;
    rec.mean_tau = mean_tau;
    rec.band_tau = tau.band_means();
    rec.thresholds = den.thresholds.t;
    rec.alpha = alpha;
    rec.csure = g.csure_b;
    if (hooks.metric) rec.nmse_db = hooks.metric(pvdamp_output(w_hat, r, cfg.output_mode, y, mask, coils));
    rec.seconds = seconds_since(start);
    out.trace.records.push_back(rec);
    if (hooks.observer) hooks.observer(IterateView{k, r, tau, w_hat, out.trace.records.back()});

    if (plateau) return finish(w_hat, r, tau, StopReason::tau_plateau, k + 1);

    r_tilde = onsager_correct(w_hat, r, alpha, den.thresholds.t);
    require_finite(r_tilde, "Onsager-corrected estimate");

    w_prev = std::move(w_hat);
    r_prev = std::move(r);
    tau_prev = tau;
    mean_prev = mean_tau;
  }
  return finish(w_prev, r_prev, tau_prev, StopReason::max_iters, cfg.max_iters);
}

double fista_objective(const ComplexImage& x, const MultiCoilArray& y, const RealImage& mask, const CoilSet& coils,
                       double lambda, int levels) {
  const MultiCoilArray z = data_residual(y, x, coils, mask);
  double l1 = 0.0;
  for (const auto& v : dwt2(x, levels).data) l1 += std::abs(v);
  return 0.5 * squared_norm(z.values()) + lambda * l1;
}

ReconResult fista(const MultiCoilArray& y, const RealImage& mask, const CoilSet& coils, double lambda,
                  const SolverConfig& cfg, const SolveHooks& hooks) {
  cfg.validate();
  require_problem(y, mask, coils);
  require(lambda >= 0.0 && std::isfinite(lambda), "lambda must be finite and non-negative");
  const auto start = Clock::now();
  const int rows = y.rows(), cols = y.cols();

  ComplexImage x(rows, cols), v(rows, cols);
  double fx = fista_objective(x, y, mask, coils, lambda, cfg.levels);
  double t = 1.0;
  const std::vector<double> thresholds(x.size(), lambda);
  ReconResult out;
  out.stop_reason = StopReason::max_iters;
  out.iterations_run = cfg.max_iters;

  for (int k = 0; k < cfg.max_iters; ++k) {
    const ComplexImage u = add(v, adjoint(data_residual(y, v, coils, mask), coils));
    const ComplexImage z = idwt2(soft_threshold(dwt2(u, cfg.levels), thresholds).w_hat);
    const double fz = fista_objective(z, y, mask, coils, lambda, cfg.levels);
    if (!std::isfinite(fz)) throw NumericalError("FISTA objective became non-finite");

    const ComplexImage x_prev = x;
    if (fz <= fx) {
      x = z;
      fx = fz;
    }
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    for (std::size_t i = 0; i < v.size(); ++i)
      v[i] = x[i] + (t / t_next) * (z[i] - x[i]) + ((t - 1.0) / t_next) * (x[i] - x_prev[i]);
    t = t_next;

    double change = 0.0, base = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) {
      change += std::norm(z[i] - x_prev[i]);
      base += std::norm(x_prev[i]);
    }

    IterateRecord rec;
    rec.k = k;
    rec.objective = fx;
    if (hooks.metric) rec.nmse_db = hooks.metric(x);
    rec.seconds = seconds_since(start);
    out.trace.records.push_back(rec);

    const bool converged = base > 0.0 ? std::sqrt(change / base) < cfg.eps_stop : change == 0.0;
    if (converged) {
      out.stop_reason = StopReason::iterate_plateau;
      out.iterations_run = k + 1;
      break;
    }
  }
  out.x_hat = x;
  out.w_hat = dwt2(x, cfg.levels);
  return out;
}

double fista_lambda_heuristic(const MultiCoilArray& y, const RealImage& mask, const RealImage& density,
                              const CoilSet& coils, int levels) {
  auto w = dwt2(zero_filled(y, mask, density, coils), levels);
  std::vector<double> mags;
  mags.reserve(w.data.size());
  for (const auto& v : w.data) mags.push_back(std::abs(v));
  auto mid = mags.begin() + static_cast<std::ptrdiff_t>(mags.size() / 2);
  std::nth_element(mags.begin(), mid, mags.end());
  return *mid;
}

std::vector<double> default_lambda_grid(double lambda0, int points) {
  require(lambda0 > 0.0 && std::isfinite(lambda0), "lambda grid centre must be positive");
  require(points >= 1, "lambda grid needs at least one point");
  std::vector<double> grid;
  for (int i = 0; i < points; ++i) {
    const double e = points == 1 ? 0.0 : -2.0 + 4.0 * i / (points - 1);
    grid.push_back(lambda0 * std::pow(10.0, e));
  }
  return grid;
}

LambdaTuning tune_fista_lambda(const MultiCoilArray& y, const RealImage& mask, const CoilSet& coils,
                               const ComplexImage& x_ref, const std::vector<double>& grid, const SolverConfig& cfg) {
  require(!grid.empty(), "lambda grid is empty");
  require(x_ref.rows() == y.rows() && x_ref.cols() == y.cols(), "reference and k-space shapes differ");
  const RealImage support = support_mask(x_ref);
  LambdaTuning best;
  double best_nmse = 0.0;
  for (double lambda : grid) {
    ReconResult res = fista(y, mask, coils, lambda, cfg);
    const double e = nmse_db(res.x_hat, x_ref, support);
    best.curve.emplace_back(lambda, e);
    if (best.curve.size() == 1 || e < best_nmse) {
      best_nmse = e;
      best.lambda_star = lambda;
      best.result = std::move(res);
    }
  }
  return best;
}

double white_variance_mad(const WaveletCoeffs& w) {
  const Band& hh = w.map.find(Orientation::HH, 1);
  std::vector<double> parts;
  parts.reserve(2 * hh.count());
  for (std::size_t j = hh.offset; j < hh.end(); ++j) {
    parts.push_back(std::abs(w.data[j].real()));
    parts.push_back(std::abs(w.data[j].imag()));
  }
  auto mid = parts.begin() + static_cast<std::ptrdiff_t>(parts.size() / 2);
  std::nth_element(parts.begin(), mid, parts.end());
  const double sigma = *mid / 0.6745;
  return 2.0 * sigma * sigma;
}

ReconResult sure_it(const MultiCoilArray& y, const RealImage& mask, const CoilSet& coils, const SolverConfig& cfg,
                    const SolveHooks& hooks) {
  cfg.validate();
  require_problem(y, mask, coils);
  const auto start = Clock::now();
  const int rows = y.rows(), cols = y.cols();

  ComplexImage x(rows, cols), v(rows, cols);
  double t = 1.0;
  ReconResult out;
  out.stop_reason = StopReason::max_iters;
  out.iterations_run = cfg.max_iters;

  for (int k = 0; k < cfg.max_iters; ++k) {
    const WaveletCoeffs w = dwt2(add(v, adjoint(data_residual(y, v, coils, mask), coils)), cfg.levels);
    require_finite(w, "SURE-IT gradient step");
    const double sigma2 = white_variance_mad(w);
    const std::vector<double> tau(w.data.size(), sigma2);
    const SureDenoise den = sure_denoise(w, tau, cfg.denoiser_mode);
    const ComplexImage z = idwt2(den.result.w_hat);

    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    double change = 0.0, base = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) {
      v[i] = z[i] + ((t - 1.0) / t_next) * (z[i] - x[i]);
      change += std::norm(z[i] - x[i]);
      base += std::norm(x[i]);
    }
    t = t_next;
    x = z;
    out.w_hat = den.result.w_hat;

    IterateRecord rec;
    rec.k = k;
    rec.mean_tau = sigma2;
    rec.thresholds = den.thresholds.t;
    rec.alpha = den.result.alpha;
    rec.csure = den.result.csure_b;
    if (hooks.metric) rec.nmse_db = hooks.metric(x);
    rec.seconds = seconds_since(start);
    out.trace.records.push_back(rec);

    const bool converged = base > 0.0 ? std::sqrt(change / base) < cfg.eps_stop : change == 0.0;
    if (converged) {
      out.stop_reason = StopReason::iterate_plateau;
      out.iterations_run = k + 1;
      break;
    }
  }
  out.x_hat = x;
  return out;
}

}  // namespace pvdamp
