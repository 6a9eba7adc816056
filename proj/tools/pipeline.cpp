#include "pipeline.hpp"

#include <cstdlib>
#include <fstream>
#include <thread>

#include "pvdamp/errors.hpp"

namespace pvdamp::cli {

namespace fs = std::filesystem;

Algo parse_algo(const std::string& name) {
  if (name == "pvdamp") return Algo::pvdamp;
  if (name == "pvdamp-unbiased") return Algo::pvdamp_unbiased;
  if (name == "fista") return Algo::fista;
  if (name == "fista-opt") return Algo::fista_opt;
  if (name == "sure-it") return Algo::sure_it;
  throw ValidationError("unknown algorithm '" + name + "'");
}

const char* algo_name(Algo algo) {
  switch (algo) {
    case Algo::pvdamp: return "pvdamp";
    case Algo::pvdamp_unbiased: return "pvdamp-unbiased";
    case Algo::fista: return "fista";
    case Algo::fista_opt: return "fista-opt";
    case Algo::sure_it: return "sure-it";
  }
  return "?";
}

SolverConfig solver_config(Algo algo, const SolverOverrides& o) {
  bool amp = algo == Algo::pvdamp || algo == Algo::pvdamp_unbiased;
  SolverConfig cfg = amp ? SolverConfig{} : SolverConfig::fista_defaults();
  if (algo == Algo::pvdamp_unbiased) cfg.output_mode = OutputMode::unbiased;
  if (o.rho) cfg.rho = *o.rho;
  if (o.eps) cfg.eps_stop = *o.eps;
  if (o.max_iters) cfg.max_iters = *o.max_iters;
  cfg.levels = o.levels;
  cfg.denoiser_mode = o.denoiser;
  cfg.validate();
  return cfg;
}

AlgoRun run_algo(Algo algo, const MultiCoilArray& y, const RealImage& mask, const RealImage& density,
                 const CoilSet& coils, const NoiseCov& noise, const SolverOverrides& o, std::optional<double> lambda,
                 const ComplexImage* ref, const SolveHooks& hooks) {
  auto cfg = solver_config(algo, o);
  AlgoRun run;
  switch (algo) {
    case Algo::pvdamp:
    case Algo::pvdamp_unbiased:
      run.result = solve_pvdamp(y, mask, density, coils, noise, cfg, hooks);
      break;
    case Algo::fista:
      require(lambda.has_value(), "fista needs --lambda");
      run.lambda = *lambda;
      run.result = fista(y, mask, coils, *lambda, cfg, hooks);
      break;
    case Algo::fista_opt: {
      require(ref != nullptr, "fista-opt needs --ref to pick lambda");
      double lambda0 = fista_lambda_heuristic(y, mask, density, coils, cfg.levels);
      auto tuned = tune_fista_lambda(y, mask, coils, *ref, default_lambda_grid(lambda0, o.grid_points), cfg);
      run.lambda = tuned.lambda_star;
      run.lambda_curve = tuned.curve;
      run.result = std::move(tuned.result);
      break;
    }
    case Algo::sure_it:
      run.result = sure_it(y, mask, coils, cfg, hooks);
      break;
  }
  return run;
}

Scenario make_scenario(const ScenarioConfig& cfg, std::uint64_t seed) {
  Scenario s;
  s.x0 = make_phantom(cfg.rows, cfg.cols, seed, cfg.kind).x0;
  s.coils = simulate_sensitivities(cfg.rows, cfg.cols, cfg.coils, seed + 1);
  s.density = make_density(cfg.rows, cfg.cols,
                           {.acceleration = cfg.acceleration, .calib_rows = cfg.calib_rows, .calib_cols = cfg.calib_cols});
  s.mask = draw_mask(s.density, seed + 2);
  s.noise = make_noise_cov(cfg.coils, cfg.snr_db, seed + 3, signal_power(s.x0, s.coils), cfg.noise_model).cov;
  s.y = acquire(s.x0, s.coils, s.mask.m, s.noise, seed + 4);
  return s;
}

fs::path noise_path(const fs::path& y_stem) {
  auto name = y_stem.filename();
  if (name.extension() == ".json" || name.extension() == ".bin") name = name.stem();
  return y_stem.parent_path() / (name.string() + ".noise.json");
}

void save_noise(const fs::path& path, const NoiseSpec& spec) {
  const auto& s = spec.cov.shared;
  nlohmann::json rows = nlohmann::json::array();
  for (int a = 0; a < s.rows(); ++a) {
    nlohmann::json row = nlohmann::json::array();
    for (int b = 0; b < s.cols(); ++b) row.push_back({s(a, b).real(), s(a, b).imag()});
    rows.push_back(row);
  }
  auto j = spec.to_json();
  j["sigma"] = rows;
  std::ofstream out(path);
  require(static_cast<bool>(out), "cannot open " + path.string() + " for writing");
  out << j.dump(2) << '\n';
}

NoiseCov load_noise(const fs::path& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), "cannot open " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("malformed noise file " + path.string() + ": " + e.what());
  }
  require(j.contains("sigma") && j["sigma"].is_array(), "noise file lacks a sigma matrix");
  const auto& rows = j["sigma"];
  int n = static_cast<int>(rows.size());
  require(n > 0, "noise covariance is empty");
  NoiseCov cov = NoiseCov::zeros(n);
  for (int a = 0; a < n; ++a) {
    require(rows[a].size() == static_cast<std::size_t>(n), "noise covariance must be square");
    for (int b = 0; b < n; ++b) cov.shared(a, b) = cplx(rows[a][b].at(0).get<double>(), rows[a][b].at(1).get<double>());
  }
  cov.validate();
  return cov;
}

unsigned worker_threads() {
  unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const char* env = std::getenv("PVDAMP_THREADS");
  if (env == nullptr || *env == '\0') return hw;
  char* end = nullptr;
  long v = std::strtol(env, &end, 10);
  require(end != env && *end == '\0' && v > 0, "PVDAMP_THREADS must be a positive integer");
  return static_cast<unsigned>(v);
}

}  // namespace pvdamp::cli
