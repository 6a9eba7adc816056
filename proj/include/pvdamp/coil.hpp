#pragma once

#include <Eigen/Dense>
#include <cstdint>

#include "pvdamp/core.hpp"
#include "pvdamp/sampling.hpp"
#include "pvdamp/wavelet.hpp"

namespace pvdamp {

/// Sensitivity maps S_c with sum_c |S_c|^2 = 1 at every pixel.
struct CoilSet {
  MultiCoilArray maps;

  int coils() const { return maps.coils(); }
  int rows() const { return maps.rows(); }
  int cols() const { return maps.cols(); }
};

/// Flat-sensitivity coefficients xi[c, j] = sum_pixel |Psi_j(pixel)|^2 conj(S_c(pixel)).
struct XiMap {
  int coils = 0;
  SubbandMap map;
  std::vector<cplx> values;  // coil-major: values[c * N + j]

  cplx operator()(int c, std::size_t j) const { return values[c * map.size() + j]; }
};

/// Divides every pixel's coil vector by its l2 norm. Throws on a zero-norm pixel.
CoilSet normalize_sensitivities(const MultiCoilArray& raw);

struct SensitivityConfig {
  double width = 1.0;        // Gaussian bump sigma as a fraction of the larger image side
  double phase_scale = 0.1;  // max magnitude (radians) of each polynomial phase coefficient
};

/// Smooth synthetic surface-coil maps: complex Gaussian bumps centred on points
/// spread around the image border with a random low-order polynomial phase,
/// then normalized. Deterministic per seed.
CoilSet simulate_sensitivities(int rows, int cols, int n_coils, std::uint64_t seed,
                               const SensitivityConfig& cfg = {});

XiMap compute_xi(const CoilSet& coils, int levels);

struct PcaCompression {
  MultiCoilArray kspace;              // (n_virtual, H, W)
  Eigen::MatrixXcd basis;             // N_c x n_virtual, orthonormal columns
  std::vector<double> singular_values;  // all N_c, descending

  /// sum of the top-k sigma^2 over sum of all sigma^2
  double retained_energy(int k) const;
};

/// Centered (rows x cols) block of every coil.
MultiCoilArray extract_calibration(const MultiCoilArray& kspace, int rows, int cols);

/// Derives the virtual-coil basis from the SVD of the coil-by-sample matrix of
/// `calibration` and projects every sample of `full` onto the top n_virtual
/// left singular vectors.
PcaCompression pca_compress(const MultiCoilArray& calibration, const MultiCoilArray& full, int n_virtual);

/// Sensitivities in a compressed basis (U^H S per pixel), renormalized.
CoilSet compress_coils(const CoilSet& coils, const Eigen::MatrixXcd& basis);

/// Per coil: mask * fft2c(S_c * x).
MultiCoilArray forward(const ComplexImage& x, const CoilSet& coils, const RealImage& mask);

/// sum_c conj(S_c) * ifft2c(y_c).
ComplexImage adjoint(const MultiCoilArray& y, const CoilSet& coils);

/// Density-compensated adjoint: sum_c conj(S_c) * ifft2c(y_c / p).
ComplexImage adjoint_compensated(const MultiCoilArray& y, const CoilSet& coils, const RealImage& density);

}  // namespace pvdamp
