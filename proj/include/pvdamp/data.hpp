#pragma once

#include <cstdint>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "pvdamp/aliasing.hpp"
#include "pvdamp/coil.hpp"
#include "pvdamp/core.hpp"

namespace pvdamp {

enum class PhantomKind { ellipses, blobs_and_vessels };

const char* phantom_kind_name(PhantomKind kind);
PhantomKind parse_phantom_kind(const std::string& name);

struct Phantom {
  ComplexImage x0;  // max |x0| = 1
  nlohmann::json descriptor;
};

/// Overlapping ellipses of varying intensity under a smooth polynomial phase.
/// blobs_and_vessels adds Gaussian blobs and thin bright curvilinear vessels.
/// Deterministic per seed.
Phantom make_phantom(int rows, int cols, std::uint64_t seed, PhantomKind kind = PhantomKind::ellipses);

enum class NoiseModel { diagonal, correlated };

const char* noise_model_name(NoiseModel model);
NoiseModel parse_noise_model(const std::string& name);

struct NoiseSpec {
  NoiseCov cov;
  std::vector<cplx> v;  // per-coil draw with |v_c| = c
  double c = 0.0;
  NoiseModel model = NoiseModel::diagonal;
  double snr_db = 0.0;

  nlohmann::json to_json() const;
};

/// Mean over coils of |F S_c x0|^2 / N.
double signal_power(const ComplexImage& x0, const CoilSet& coils);

/// c^2 = signal_power / 10^(snr_db / 10). v has Re, Im ~ U(-1, 1), rescaled to modulus c.
/// diagonal: Sigma = c^2 I. correlated: Sigma = v v^H + 0.01 c^2 I.
NoiseSpec make_noise_cov(int n_coils, double snr_db, std::uint64_t seed, double signal_power,
                         NoiseModel model = NoiseModel::diagonal);

/// mask * (fft2c(S_c x0) + eps_c), eps ~ CN(0, Sigma) drawn at every location
/// (so the noise realization does not depend on the mask).
MultiCoilArray acquire(const ComplexImage& x0, const CoilSet& coils, const RealImage& mask, const NoiseCov& noise,
                       std::uint64_t seed);

}  // namespace pvdamp
