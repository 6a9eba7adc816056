#include <CLI11.hpp>

#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#include "manifest.hpp"
#include "pipeline.hpp"
#include "pvdamp/array_file.hpp"
#include "pvdamp/eval.hpp"

#ifndef PVDAMP_VERSION
#define PVDAMP_VERSION "0.0.0"
#endif

namespace fs = std::filesystem;
using namespace pvdamp;
using namespace pvdamp::cli;

namespace {

struct Shape {
  std::vector<int> dims{64, 64};
  int rows() const { return dims.at(0); }
  int cols() const { return dims.at(1); }
};

RunManifest start_manifest(const std::string& command, int argc, char** argv) {
  RunManifest m;
  m.version = PVDAMP_VERSION;
  m.command = command;
  m.argv.assign(argv, argv + argc);
  return m;
}

void finish_manifest(RunManifest& m, const fs::path& primary) {
  auto path = manifest_path(primary);
  m.write(path);
  std::cerr << "wrote " << path.string() << '\n';
}

void write_json(const fs::path& path, const nlohmann::json& j) {
  std::ofstream out(path);
  require(static_cast<bool>(out), "cannot open " + path.string() + " for writing");
  out << j.dump(2) << '\n';
}

CoilSet load_coils(const fs::path& path) { return CoilSet{load_stack(path)}; }

// ---- phantom ---------------------------------------------------------------

struct PhantomArgs {
  Shape shape;
  std::string kind = "ellipses";
  std::uint64_t seed = 0;
  fs::path out;
};

void cmd_phantom(const PhantomArgs& a, RunManifest& m) {
  require_image_shape(a.shape.rows(), a.shape.cols());
  auto ph = make_phantom(a.shape.rows(), a.shape.cols(), a.seed, parse_phantom_kind(a.kind));
  save_image(a.out, ph.x0);
  m.config = {{"shape", a.shape.dims}, {"kind", a.kind}, {"descriptor", ph.descriptor}};
  m.seeds = {{"phantom", a.seed}};
  m.add_output("x0", a.out);
  finish_manifest(m, a.out);
}

// ---- coils -----------------------------------------------------------------

struct CoilArgs {
  Shape shape;
  int coils = 4;
  std::uint64_t seed = 0;
  SensitivityConfig cfg;
  fs::path out;
};

void cmd_coils(const CoilArgs& a, RunManifest& m) {
  require_image_shape(a.shape.rows(), a.shape.cols());
  auto coils = simulate_sensitivities(a.shape.rows(), a.shape.cols(), a.coils, a.seed, a.cfg);
  save_stack(a.out, coils.maps);
  m.config = {{"shape", a.shape.dims}, {"coils", a.coils}, {"width", a.cfg.width}, {"phase_scale", a.cfg.phase_scale}};
  m.seeds = {{"coils", a.seed}};
  m.add_output("coils", a.out);
  finish_manifest(m, a.out);
}

// ---- mask ------------------------------------------------------------------

struct MaskArgs {
  Shape shape;
  double R = 5.0;
  std::vector<int> calib{8, 8};
  double decay = 4.0;
  double p_min = 1e-3;
  std::string layout = "points";
  std::uint64_t seed = 0;
  fs::path out;
  fs::path density_out;
};

void cmd_mask(MaskArgs a, RunManifest& m) {
  require_even_shape(a.shape.rows(), a.shape.cols());
  require(a.layout == "points" || a.layout == "columns", "--layout must be points or columns");
  DensityConfig cfg{.acceleration = a.R,
                    .calib_rows = a.calib.at(0),
                    .calib_cols = a.calib.at(1),
                    .decay_exponent = a.decay,
                    .p_min = a.p_min,
                    .layout = a.layout == "points" ? SamplingLayout::points : SamplingLayout::columns};
  auto density = make_density(a.shape.rows(), a.shape.cols(), cfg);
  auto mask = draw_mask(density, a.seed);
  if (a.density_out.empty()) a.density_out = a.out.parent_path() / (a.out.filename().string() + "_density");
  save_real(a.out, mask.m);
  save_real(a.density_out, density.p);
  m.config = {{"shape", a.shape.dims}, {"R", a.R},         {"calib", a.calib},
              {"decay", a.decay},      {"p_min", a.p_min}, {"layout", a.layout}};
  m.seeds = {{"mask", a.seed}};
  m.results = {{"sampled", mask.sampled()},
               {"realized_acceleration", realized_acceleration(mask)},
               {"expected_samples", density.expected_samples()}};
  m.add_output("mask", a.out);
  m.add_output("density", a.density_out);
  finish_manifest(m, a.out);
}

// ---- acquire ---------------------------------------------------------------

struct AcquireArgs {
  fs::path x0, coils, mask, out;
  double snr_db = 30.0;
  std::string noise_model = "diagonal";
  std::uint64_t seed = 0;
};

void cmd_acquire(const AcquireArgs& a, RunManifest& m) {
  auto x0 = load_image(a.x0);
  auto coils = load_coils(a.coils);
  auto mask = load_real(a.mask);
  require(mask.rows() == x0.rows() && mask.cols() == x0.cols(), "mask and image have different shapes");
  auto spec = make_noise_cov(coils.coils(), a.snr_db, a.seed, signal_power(x0, coils), parse_noise_model(a.noise_model));
  auto y = acquire(x0, coils, mask, spec.cov, a.seed + 1);
  save_stack(a.out, y);
  auto npath = noise_path(a.out);
  save_noise(npath, spec);
  m.config = {{"snr_db", a.snr_db}, {"noise_model", a.noise_model}};
  m.seeds = {{"noise_cov", a.seed}, {"noise_draw", a.seed + 1}};
  m.add_input("x0", a.x0);
  m.add_input("coils", a.coils);
  m.add_input("mask", a.mask);
  m.add_output("y", a.out);
  m.add_output("noise", npath);
  finish_manifest(m, a.out);
}

// ---- reconstruct -----------------------------------------------------------

struct ReconArgs {
  std::string algo;
  fs::path y, mask, density, coils, ref, out, trace;
  std::optional<double> lambda;
  SolverOverrides solver;
  std::string denoiser = "tau_scaled";
};

fs::path trace_array(const fs::path& trace, const std::string& what, int k) {
  auto stem = trace.filename();
  if (stem.has_extension()) stem = stem.stem();
  return trace.parent_path() / (stem.string() + "_" + what + std::to_string(k));
}

void cmd_reconstruct(ReconArgs a, RunManifest& m) {
  Algo algo = parse_algo(a.algo);
  a.solver.denoiser = parse_denoiser_mode(a.denoiser);
  bool amp = algo == Algo::pvdamp || algo == Algo::pvdamp_unbiased;
  if (algo == Algo::fista) require(a.lambda.has_value(), "--algo fista requires --lambda");
  if (algo == Algo::fista_opt) require(!a.ref.empty(), "--algo fista-opt requires --ref");
  if (amp || algo == Algo::fista_opt) require(!a.density.empty(), "--algo " + a.algo + " requires --density");
  if (a.lambda) require(*a.lambda >= 0.0 && std::isfinite(*a.lambda), "--lambda must be finite and >= 0");

  auto y = load_stack(a.y);
  auto mask = load_real(a.mask);
  auto coils = load_coils(a.coils);
  RealImage density = a.density.empty() ? RealImage(mask.rows(), mask.cols(), 1.0) : load_real(a.density);

  NoiseCov noise = NoiseCov::zeros(coils.coils());
  auto npath = noise_path(a.y);
  bool have_noise = fs::exists(npath);
  if (have_noise) noise = load_noise(npath);
  require(noise.coils() == coils.coils(), "noise covariance and coil maps disagree on the coil count");

  std::optional<ComplexImage> ref;
  if (!a.ref.empty()) ref = load_image(a.ref);

  SolveHooks hooks;
  RealImage support;
  if (ref) {
    support = support_mask(*ref);
    hooks.metric = [&](const ComplexImage& x) { return nmse_db(x, *ref, support); };
  }

  std::ofstream trace;
  if (!a.trace.empty()) {
    trace.open(a.trace);
    require(static_cast<bool>(trace), "cannot open " + a.trace.string() + " for writing");
  }
  std::vector<fs::path> trace_files;
  if (trace.is_open() && amp) {
    hooks.observer = [&](const IterateView& v) {
      auto r_path = trace_array(a.trace, "r", v.k);
      auto tau_path = trace_array(a.trace, "tau", v.k);
      const auto& map = v.r.map;
      save_array(r_path, ArrayFile{{map.rows(), map.cols()}, DType::complex64, v.r.data, {}});
      save_array(tau_path, ArrayFile{{map.rows(), map.cols()}, DType::float64, {}, v.tau.tau});
      trace_files.push_back(r_path);
      trace_files.push_back(tau_path);
      auto line = IterateTrace{{v.record}}.record_json(0);
      line["levels"] = map.levels();
      line["r"] = r_path.filename().string();
      line["tau"] = tau_path.filename().string();
      trace << line.dump() << '\n' << std::flush;
    };
  }

  auto run = run_algo(algo, y, mask, density, coils, noise, a.solver, a.lambda,
                      ref ? &*ref : nullptr, hooks);
  const auto& res = run.result;

  if (trace.is_open()) {
    if (!amp)
      for (std::size_t k = 0; k < res.trace.records.size(); ++k) trace << res.trace.record_json(k).dump() << '\n';
    nlohmann::json summary = {{"summary", true},
                              {"algo", a.algo},
                              {"iterations_run", res.iterations_run},
                              {"stop_reason", stop_reason_name(res.stop_reason)}};
    if (run.lambda) summary["lambda"] = *run.lambda;
    trace << summary.dump() << '\n';
    trace.close();
  }

  save_image(a.out, res.x_hat);

  auto cfg = solver_config(algo, a.solver);
  m.config = {{"algo", a.algo}, {"solver", cfg.to_json()}, {"noise_from_file", have_noise}};
  if (a.lambda) m.config["lambda"] = *a.lambda;
  if (algo == Algo::fista_opt) m.config["grid_points"] = a.solver.grid_points;
  m.add_input("y", a.y);
  m.add_input("mask", a.mask);
  m.add_input("coils", a.coils);
  if (!a.density.empty()) m.add_input("density", a.density);
  if (have_noise) m.add_input("noise", npath);
  if (ref) m.add_input("ref", a.ref);
  m.results = {{"iterations_run", res.iterations_run}, {"stop_reason", stop_reason_name(res.stop_reason)}};
  if (run.lambda) m.results["lambda"] = *run.lambda;
  if (!run.lambda_curve.empty()) m.results["lambda_curve"] = run.lambda_curve;
  if (ref) m.results["nmse_db"] = nmse_db(res.x_hat, *ref, support);
  m.add_output("xhat", a.out);
  if (trace.is_open() || !a.trace.empty()) m.add_output("trace", a.trace);
  for (std::size_t i = 0; i < trace_files.size(); ++i)
    m.add_output("trace_array_" + std::to_string(i), trace_files[i]);
  finish_manifest(m, a.out);
}

// ---- evaluate --------------------------------------------------------------

struct EvalArgs {
  fs::path xhat, ref, out;
  double fraction = 0.05;
};

void cmd_evaluate(const EvalArgs& a, RunManifest& m) {
  auto report = evaluate_metrics(load_image(a.xhat), load_image(a.ref), a.fraction);
  write_json(a.out, report.to_json());
  m.config = {{"support_fraction", a.fraction}};
  m.add_input("xhat", a.xhat);
  m.add_input("ref", a.ref);
  m.results = report.to_json();
  m.add_output("metrics", a.out);
  finish_manifest(m, a.out);
}

// ---- se-check --------------------------------------------------------------

struct SeArgs {
  fs::path trace, ref, out;
  std::string bounds = "strict";
};

void cmd_se_check(const SeArgs& a, RunManifest& m) {
  require(a.bounds == "strict" || a.bounds == "relaxed", "--bounds must be strict or relaxed");
  auto bounds = a.bounds == "strict" ? GaussianityBounds{} : GaussianityBounds::relaxed();
  auto x0 = load_image(a.ref);

  std::ifstream in(a.trace);
  require(static_cast<bool>(in), "cannot open " + a.trace.string());
  std::vector<NormalizedResidual> etas;
  nlohmann::json calibration = nlohmann::json::array();
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError("trace line " + std::to_string(line_no) + " is not JSON: " + e.what());
    }
    if (!j.contains("r") || !j.contains("tau")) continue;
    auto dir = a.trace.parent_path();
    auto r_file = load_array(dir / j["r"].get<std::string>());
    auto tau_file = load_array(dir / j["tau"].get<std::string>());
    require(r_file.dtype == DType::complex64 && tau_file.dtype == DType::float64 && r_file.shape.size() == 2,
            "trace arrays have unexpected types");
    require(r_file.shape == tau_file.shape, "trace r and tau shapes differ");
    SubbandMap map(static_cast<int>(r_file.shape[0]), static_cast<int>(r_file.shape[1]), j.at("levels").get<int>());
    require(map.rows() == x0.rows() && map.cols() == x0.cols(), "reference and trace shapes differ");
    WaveletCoeffs r{std::move(r_file.complex_values), map};
    TauMap tau{std::move(tau_file.real_values), map};
    auto w0 = dwt2(x0, map.levels());
    etas.push_back(normalized_residual(r, w0, tau));

    auto err = empirical_error(r, w0);
    auto tau_means = tau.band_means();
    nlohmann::json ratios = nlohmann::json::array();
    for (std::size_t b = 0; b < tau_means.size(); ++b)
      ratios.push_back(tau_means[b] > 0.0 ? err.band_means[b] / tau_means[b] : std::nan(""));
    calibration.push_back({{"k", j.value("k", static_cast<int>(etas.size()) - 1)}, {"error_over_tau", ratios}});
  }
  require(!etas.empty(), "trace has no P-VDAMP iterates (r/tau); reconstruct with --algo pvdamp --trace");

  auto report = se_report(etas, bounds);
  auto out = report.to_json();
  out["calibration"] = calibration;
  write_json(a.out, out);

  m.config = {{"bounds", a.bounds}};
  m.add_input("trace", a.trace);
  m.add_input("ref", a.ref);
  m.results = {{"all_pass", report.all_pass()}, {"iterations", etas.size()}};
  m.add_output("se", a.out);
  finish_manifest(m, a.out);
}

// ---- sweep -----------------------------------------------------------------

struct SweepArgs {
  std::string vary;
  std::vector<double> values;
  Shape shape;
  int coils = 4;
  double R = 5.0;
  std::vector<int> calib{8, 8};
  double snr_db = 30.0;
  std::string kind = "blobs_and_vessels";
  std::string noise_model = "diagonal";
  int seeds = 5;
  std::uint64_t seed = 0;
  std::vector<std::string> algos;
  SolverOverrides solver;
  fs::path out;
  fs::path curves;
};

struct SweepRow {
  std::string text;
  std::vector<std::string> curve;
};

void cmd_sweep(SweepArgs a, RunManifest& m) {
  require(a.vary == "snr" || a.vary == "R" || a.vary == "lambda", "--vary must be snr, R or lambda");
  require(!a.values.empty(), "--values must not be empty");
  require(a.seeds > 0, "--seeds must be positive");
  if (a.algos.empty())
    a.algos = a.vary == "lambda" ? std::vector<std::string>{"fista"}
                                 : std::vector<std::string>{"pvdamp", "pvdamp-unbiased", "fista-opt", "sure-it"};
  std::vector<Algo> algos;
  for (const auto& s : a.algos) algos.push_back(parse_algo(s));
  if (a.vary == "lambda")
    for (auto al : algos) require(al == Algo::fista, "--vary lambda sweeps --algos fista only");

  ScenarioConfig base{.rows = a.shape.rows(),
                      .cols = a.shape.cols(),
                      .coils = a.coils,
                      .acceleration = a.R,
                      .calib_rows = a.calib.at(0),
                      .calib_cols = a.calib.at(1),
                      .snr_db = a.snr_db,
                      .kind = parse_phantom_kind(a.kind),
                      .noise_model = parse_noise_model(a.noise_model)};
  require_image_shape(base.rows, base.cols);
  solver_config(Algo::pvdamp, a.solver);  // validate overrides up front

  struct Task {
    double value;
    int trial;
  };
  std::vector<Task> tasks;
  for (double v : a.values)
    for (int t = 0; t < a.seeds; ++t) tasks.push_back({v, t});
  std::vector<SweepRow> rows(tasks.size());
  std::vector<std::exception_ptr> errors(tasks.size());

  auto run_task = [&](std::size_t i) {
    const auto& task = tasks[i];
    ScenarioConfig cfg = base;
    if (a.vary == "snr") cfg.snr_db = task.value;
    if (a.vary == "R") cfg.acceleration = task.value;
    std::uint64_t seed = a.seed + 10 * static_cast<std::uint64_t>(task.trial);
    auto sc = make_scenario(cfg, seed);
    auto support = support_mask(sc.x0);
    SolveHooks hooks;
    hooks.metric = [&](const ComplexImage& x) { return nmse_db(x, sc.x0, support); };

    std::ostringstream text;
    text.precision(10);
    for (auto algo : algos) {
      std::optional<double> lambda;
      if (a.vary == "lambda")
        lambda = task.value * fista_lambda_heuristic(sc.y, sc.mask.m, sc.density.p, sc.coils, a.solver.levels);
      auto t0 = std::chrono::steady_clock::now();
      auto run = run_algo(algo, sc.y, sc.mask.m, sc.density.p, sc.coils, sc.noise, a.solver, lambda, &sc.x0, hooks);
      double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      auto met = evaluate_metrics(run.result.x_hat, sc.x0);
      text << a.vary << ',' << task.value << ',' << seed << ',' << algo_name(algo) << ',';
      if (run.lambda) text << *run.lambda;
      text << ',' << met.nmse_db << ',' << met.ssim << ',' << met.hfen << ',' << run.result.iterations_run << ','
           << stop_reason_name(run.result.stop_reason) << ',' << secs << '\n';
      for (const auto& rec : run.result.trace.records) {
        std::ostringstream c;
        c.precision(10);
        c << a.vary << ',' << task.value << ',' << seed << ',' << algo_name(algo) << ',' << rec.k << ','
          << rec.seconds << ',';
        if (rec.nmse_db) c << *rec.nmse_db;
        c << '\n';
        rows[i].curve.push_back(c.str());
      }
    }
    rows[i].text = text.str();
  };

  unsigned n_workers = std::min<unsigned>(worker_threads(), static_cast<unsigned>(tasks.size()));
  std::atomic<std::size_t> next{0};
  {
    std::vector<std::jthread> workers;
    for (unsigned w = 0; w < n_workers; ++w)
      workers.emplace_back([&] {
        for (std::size_t i; (i = next.fetch_add(1)) < tasks.size();) {
          try {
            run_task(i);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);

  std::ofstream out(a.out);
  require(static_cast<bool>(out), "cannot open " + a.out.string() + " for writing");
  out << "vary,value,seed,algo,lambda,nmse_db,ssim,hfen,iterations,stop_reason,seconds\n";
  for (const auto& r : rows) out << r.text;
  out.close();
  if (!a.curves.empty()) {
    std::ofstream c(a.curves);
    require(static_cast<bool>(c), "cannot open " + a.curves.string() + " for writing");
    c << "vary,value,seed,algo,k,seconds,nmse_db\n";
    for (const auto& r : rows)
      for (const auto& line : r.curve) c << line;
  }

  m.config = {{"vary", a.vary},     {"values", a.values},     {"shape", a.shape.dims}, {"coils", a.coils},
              {"R", a.R},           {"calib", a.calib},       {"snr_db", a.snr_db},    {"kind", a.kind},
              {"noise_model", a.noise_model}, {"algos", a.algos}, {"threads", n_workers}};
  m.seeds = {{"base", a.seed}, {"trials", a.seeds}, {"stride", 10}};
  m.add_output("csv", a.out);
  if (!a.curves.empty()) m.add_output("curves", a.curves);
  finish_manifest(m, a.out);
}

void add_solver_options(CLI::App* sub, SolverOverrides& s) {
  sub->add_option("--rho", s.rho, "damping factor in (0, 1]");
  sub->add_option("--eps", s.eps, "relative stopping tolerance");
  sub->add_option("--max-iters", s.max_iters, "iteration cap");
  sub->add_option("--levels", s.levels, "wavelet decomposition levels")->capture_default_str();
  sub->add_option("--grid-points", s.grid_points, "lambda grid size for fista-opt")->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Variable-density AMP reconstruction for multi-coil MRI"};
  app.set_version_flag("--version", std::string(PVDAMP_VERSION));
  app.require_subcommand(1);

  PhantomArgs ph;
  auto* s_ph = app.add_subcommand("phantom", "synthesize a complex test image");
  s_ph->add_option("--shape", ph.shape.dims, "rows cols")->expected(2)->capture_default_str();
  s_ph->add_option("--kind", ph.kind, "ellipses | blobs_and_vessels")->capture_default_str();
  s_ph->add_option("--seed", ph.seed)->capture_default_str();
  s_ph->add_option("--out", ph.out, "output array stem")->required();

  CoilArgs co;
  auto* s_co = app.add_subcommand("coils", "simulate normalized coil sensitivity maps");
  s_co->add_option("--shape", co.shape.dims, "rows cols")->expected(2)->capture_default_str();
  s_co->add_option("--coils", co.coils, "number of coils")->capture_default_str();
  s_co->add_option("--seed", co.seed)->capture_default_str();
  s_co->add_option("--width", co.cfg.width, "bump width relative to the image side")->capture_default_str();
  s_co->add_option("--phase-scale", co.cfg.phase_scale, "phase polynomial coefficient bound")->capture_default_str();
  s_co->add_option("--out", co.out, "output array stem")->required();

  MaskArgs mk;
  auto* s_mk = app.add_subcommand("mask", "draw a variable-density Bernoulli mask");
  s_mk->add_option("--shape", mk.shape.dims, "rows cols")->expected(2)->capture_default_str();
  s_mk->add_option("--R", mk.R, "target acceleration")->capture_default_str();
  s_mk->add_option("--calib", mk.calib, "calibration block rows cols")->expected(2)->capture_default_str();
  s_mk->add_option("--decay", mk.decay, "density decay exponent")->capture_default_str();
  s_mk->add_option("--p-min", mk.p_min, "probability floor")->capture_default_str();
  s_mk->add_option("--layout", mk.layout, "points | columns")->capture_default_str();
  s_mk->add_option("--seed", mk.seed)->capture_default_str();
  s_mk->add_option("--out", mk.out, "mask array stem")->required();
  s_mk->add_option("--density-out", mk.density_out, "density array stem (default <out>_density)");

  AcquireArgs aq;
  auto* s_aq = app.add_subcommand("acquire", "simulate noisy undersampled multi-coil k-space");
  s_aq->add_option("--x0", aq.x0)->required();
  s_aq->add_option("--coils", aq.coils)->required();
  s_aq->add_option("--mask", aq.mask)->required();
  s_aq->add_option("--snr-db", aq.snr_db)->capture_default_str();
  s_aq->add_option("--noise-model", aq.noise_model, "diagonal | correlated")->capture_default_str();
  s_aq->add_option("--seed", aq.seed)->capture_default_str();
  s_aq->add_option("--out", aq.out, "k-space array stem")->required();

  ReconArgs rc;
  auto* s_rc = app.add_subcommand("reconstruct", "reconstruct an image from k-space");
  s_rc->add_option("--algo", rc.algo, "pvdamp | pvdamp-unbiased | fista | fista-opt | sure-it")->required();
  s_rc->add_option("--y", rc.y)->required();
  s_rc->add_option("--mask", rc.mask)->required();
  s_rc->add_option("--density", rc.density);
  s_rc->add_option("--coils", rc.coils)->required();
  s_rc->add_option("--lambda", rc.lambda, "l1 weight for fista");
  s_rc->add_option("--ref", rc.ref, "reference image for NMSE tracking and fista-opt");
  s_rc->add_option("--out", rc.out)->required();
  s_rc->add_option("--trace", rc.trace, "JSON-lines iterate trace");
  s_rc->add_option("--denoiser", rc.denoiser, "tau_scaled | flat_per_band")->capture_default_str();
  add_solver_options(s_rc, rc.solver);

  EvalArgs ev;
  auto* s_ev = app.add_subcommand("evaluate", "NMSE, SSIM and HFEN against a reference");
  s_ev->add_option("--xhat", ev.xhat)->required();
  s_ev->add_option("--ref", ev.ref)->required();
  s_ev->add_option("--out", ev.out)->required();
  s_ev->add_option("--support-fraction", ev.fraction)->capture_default_str();

  SeArgs se;
  auto* s_se = app.add_subcommand("se-check", "Gaussianity of the normalized residual per iteration");
  s_se->add_option("--trace", se.trace)->required();
  s_se->add_option("--ref", se.ref)->required();
  s_se->add_option("--out", se.out)->required();
  s_se->add_option("--bounds", se.bounds, "strict | relaxed")->capture_default_str();

  SweepArgs sw;
  auto* s_sw = app.add_subcommand("sweep", "NMSE over a parameter sweep, written as CSV");
  s_sw->add_option("--vary", sw.vary, "snr | R | lambda (lambda values scale the heuristic lambda0)")->required();
  s_sw->add_option("--values", sw.values)->required();
  s_sw->add_option("--shape", sw.shape.dims, "rows cols")->expected(2)->capture_default_str();
  s_sw->add_option("--coils", sw.coils)->capture_default_str();
  s_sw->add_option("--R", sw.R)->capture_default_str();
  s_sw->add_option("--calib", sw.calib)->expected(2)->capture_default_str();
  s_sw->add_option("--snr-db", sw.snr_db)->capture_default_str();
  s_sw->add_option("--kind", sw.kind)->capture_default_str();
  s_sw->add_option("--noise-model", sw.noise_model)->capture_default_str();
  s_sw->add_option("--seeds", sw.seeds, "trials per value")->capture_default_str();
  s_sw->add_option("--seed", sw.seed, "base seed; trial t uses seed + 10 t")->capture_default_str();
  s_sw->add_option("--algos", sw.algos, "algorithms to run");
  s_sw->add_option("--out", sw.out, "summary CSV")->required();
  s_sw->add_option("--curves", sw.curves, "per-iteration CSV (NMSE vs time)");
  add_solver_options(s_sw, sw.solver);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  CLI::App* active = app.get_subcommands().front();
  try {
    auto m = start_manifest(active->get_name(), argc, argv);
    if (active == s_ph) cmd_phantom(ph, m);
    else if (active == s_co) cmd_coils(co, m);
    else if (active == s_mk) cmd_mask(mk, m);
    else if (active == s_aq) cmd_acquire(aq, m);
    else if (active == s_rc) cmd_reconstruct(rc, m);
    else if (active == s_ev) cmd_evaluate(ev, m);
    else if (active == s_se) cmd_se_check(se, m);
    else if (active == s_sw) cmd_sweep(sw, m);
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << active->help();
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "numerical abort: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
