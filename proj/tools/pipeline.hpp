#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "pvdamp/data.hpp"
#include "pvdamp/sampling.hpp"
#include "pvdamp/solver.hpp"

namespace pvdamp::cli {

enum class Algo { pvdamp, pvdamp_unbiased, fista, fista_opt, sure_it };

Algo parse_algo(const std::string& name);
const char* algo_name(Algo algo);

/// Solver knobs that the command line may override.
struct SolverOverrides {
  std::optional<double> rho;
  std::optional<double> eps;
  std::optional<int> max_iters;
  int levels = kDefaultLevels;
  int grid_points = 15;
  DenoiserMode denoiser = DenoiserMode::tau_scaled;
};

SolverConfig solver_config(Algo algo, const SolverOverrides& o);

struct AlgoRun {
  ReconResult result;
  std::optional<double> lambda;                             // FISTA variants
  std::vector<std::pair<double, double>> lambda_curve;      // fista-opt grid
};

/// Runs one algorithm. `lambda` is required for fista; `ref` for fista-opt.
AlgoRun run_algo(Algo algo, const MultiCoilArray& y, const RealImage& mask, const RealImage& density,
                 const CoilSet& coils, const NoiseCov& noise, const SolverOverrides& o, std::optional<double> lambda,
                 const ComplexImage* ref, const SolveHooks& hooks = {});

/// A complete synthetic acquisition. Seeds: phantom s, coils s+1, mask s+2,
/// noise covariance s+3, noise draw s+4.
struct Scenario {
  ComplexImage x0;
  CoilSet coils;
  DensityMap density;
  SamplingMask mask;
  NoiseCov noise;
  MultiCoilArray y;
};

struct ScenarioConfig {
  int rows = 64;
  int cols = 64;
  int coils = 4;
  double acceleration = 5.0;
  int calib_rows = 8;
  int calib_cols = 8;
  double snr_db = 30.0;
  PhantomKind kind = PhantomKind::blobs_and_vessels;
  NoiseModel noise_model = NoiseModel::diagonal;
};

Scenario make_scenario(const ScenarioConfig& cfg, std::uint64_t seed);

/// Noise covariance side file written by `acquire` next to its k-space output.
std::filesystem::path noise_path(const std::filesystem::path& y_stem);
void save_noise(const std::filesystem::path& path, const NoiseSpec& spec);
NoiseCov load_noise(const std::filesystem::path& path);

/// Worker count from PVDAMP_THREADS, defaulting to the hardware concurrency.
unsigned worker_threads();

}  // namespace pvdamp::cli
