#pragma once

#include <functional>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "pvdamp/aliasing.hpp"
#include "pvdamp/coil.hpp"
#include "pvdamp/denoise.hpp"

namespace pvdamp {

enum class OutputMode { pvdamp, unbiased };
enum class StopReason { tau_rise, tau_plateau, max_iters, iterate_plateau };

const char* output_mode_name(OutputMode mode);
const char* stop_reason_name(StopReason reason);

struct SolverConfig {
  double rho = 0.75;
  double eps_stop = 1e-3;
  int max_iters = 50;
  int levels = kDefaultLevels;
  OutputMode output_mode = OutputMode::pvdamp;
  DenoiserMode denoiser_mode = DenoiserMode::tau_scaled;

  /// Defaults for the FISTA family (200 iterations).
  static SolverConfig fista_defaults();
  void validate() const;
  nlohmann::json to_json() const;
};

struct IterateRecord {
  int k = 0;
  double mean_tau = 0.0;              // P-VDAMP: <tau_k>; SURE-IT: the white variance
  std::vector<double> band_tau;       // per-band tau means
  std::vector<double> thresholds;     // t_b
  std::vector<double> alpha;          // alpha_b after damping
  std::vector<double> csure;          // per-band cSURE
  std::optional<double> nmse_db;      // against a supplied reference
  double objective = 0.0;             // FISTA only
  double seconds = 0.0;               // wall clock since the solve started
};

struct IterateTrace {
  std::vector<IterateRecord> records;

  nlohmann::json record_json(std::size_t k) const;
  std::string to_csv() const;
};

struct ReconResult {
  ComplexImage x_hat;
  int iterations_run = 0;
  StopReason stop_reason = StopReason::max_iters;
  IterateTrace trace;
  WaveletCoeffs w_hat;  // denoised coefficients behind x_hat
  WaveletCoeffs r;      // unbiased estimate behind x_hat (P-VDAMP only)
  TauMap tau;           // tau paired with r (P-VDAMP only)
};

/// State handed to an observer after each P-VDAMP iteration.
struct IterateView {
  int k;
  const WaveletCoeffs& r;
  const TauMap& tau;
  const WaveletCoeffs& w_hat;
  const IterateRecord& record;
};

struct SolveHooks {
  /// Called with the current output-mode estimate; result stored as the record's NMSE.
  std::function<double(const ComplexImage&)> metric;
  std::function<void(const IterateView&)> observer;
};

/// Per-band (w_hat - alpha_b r) / (1 - alpha_b). Bands with alpha_b >= 1 - 1e-9 pass w_hat
/// through when t_b = 0 and throw NumericalError otherwise.
WaveletCoeffs onsager_correct(const WaveletCoeffs& w_hat, const WaveletCoeffs& r, const std::vector<double>& alpha,
                              const std::vector<double>& t);

/// sum_c S_c^H F^H P^{-1} y_c.
ComplexImage zero_filled(const MultiCoilArray& y, const RealImage& mask, const RealImage& density,
                         const CoilSet& coils);

/// Parallel variable-density AMP with damping and tau-based stopping.
ReconResult solve_pvdamp(const MultiCoilArray& y, const RealImage& mask, const RealImage& density, const CoilSet& coils,
                   const NoiseCov& noise, const SolverConfig& cfg = {}, const SolveHooks& hooks = {});

/// Monotone FISTA on 0.5 sum_c |y_c - M F S_c x|^2 + lambda |Psi x|_1 with unit step.
ReconResult fista(const MultiCoilArray& y, const RealImage& mask, const CoilSet& coils, double lambda,
                  const SolverConfig& cfg = SolverConfig::fista_defaults(), const SolveHooks& hooks = {});

/// 0.5 sum_c |y_c - M F S_c x|^2 + lambda |Psi x|_1.
double fista_objective(const ComplexImage& x, const MultiCoilArray& y, const RealImage& mask, const CoilSet& coils,
                       double lambda, int levels);

/// median |Psi x0_hat| with x0_hat the density-compensated zero-filled estimate.
double fista_lambda_heuristic(const MultiCoilArray& y, const RealImage& mask, const RealImage& density,
                              const CoilSet& coils, int levels = kDefaultLevels);

/// lambda0 10^linspace(-2, 2, points).
std::vector<double> default_lambda_grid(double lambda0, int points = 15);

struct LambdaTuning {
  double lambda_star = 0.0;
  ReconResult result;
  std::vector<std::pair<double, double>> curve;  // (lambda, NMSE dB)
};

/// Exhaustive search over `grid`, minimizing NMSE against x_ref on its 5% support.
LambdaTuning tune_fista_lambda(const MultiCoilArray& y, const RealImage& mask, const CoilSet& coils,
                               const ComplexImage& x_ref, const std::vector<double>& grid,
                               const SolverConfig& cfg = SolverConfig::fista_defaults());

/// White variance from the finest diagonal band: 2 (median |pooled Re, Im| / 0.6745)^2.
double white_variance_mad(const WaveletCoeffs& w);

/// FISTA whose shrinkage is re-tuned each iteration by cSURE under a white model.
ReconResult sure_it(const MultiCoilArray& y, const RealImage& mask, const CoilSet& coils,
                    const SolverConfig& cfg = SolverConfig::fista_defaults(), const SolveHooks& hooks = {});

}  // namespace pvdamp
