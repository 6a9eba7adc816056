#pragma once

#include <array>
#include <string>
#include <vector>

#include "pvdamp/core.hpp"

namespace pvdamp {

/// Daubechies-4 (8-tap) synthesis low-pass filter. Analysis correlates with the
/// same taps; the high-pass filter is g[t] = (-1)^t h[7 - t].
inline constexpr std::array<double, 8> kDb4Lowpass = {
    0.2303778133088965,   0.7148465705529157,   0.6308807679298589,  -0.027983769416859854,
    -0.18703481171909309, 0.030841381835560764, 0.0328830116668852,  -0.010597401785069032};

inline constexpr int kDefaultLevels = 4;
inline constexpr int kMaxLevels = 6;

/// First letter: filter applied down the rows (vertical), second: across columns
/// (horizontal). LH is vertical low-pass / horizontal high-pass.
enum class Orientation { LL, LH, HL, HH };

std::string orientation_name(Orientation o);

struct Band {
  int id = 0;
  Orientation orientation = Orientation::LL;
  int scale = 1;            // 1 = finest (half resolution), levels = coarsest
  std::size_t offset = 0;   // first coefficient in the flat layout
  int rows = 0;             // band grid is rows x cols, stored row-major
  int cols = 0;

  std::size_t count() const { return static_cast<std::size_t>(rows) * cols; }
  std::size_t end() const { return offset + count(); }
  int stride() const { return 1 << scale; }  // spatial translation between neighbouring atoms
};

/// Flat coefficient layout: coarsest LL first, then (LH, HL, HH) for scale 1
/// (finest), then scale 2, ..., up to scale `levels`. 3*levels + 1 bands that
/// partition [0, rows*cols).
class SubbandMap {
 public:
  SubbandMap() = default;
  SubbandMap(int rows, int cols, int levels);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  int levels() const { return levels_; }
  std::size_t size() const { return static_cast<std::size_t>(rows_) * cols_; }
  const std::vector<Band>& bands() const { return bands_; }
  const Band& band(int id) const { return bands_.at(id); }
  int band_count() const { return static_cast<int>(bands_.size()); }
  const Band& find(Orientation o, int scale) const;

  bool operator==(const SubbandMap& o) const {
    return rows_ == o.rows_ && cols_ == o.cols_ && levels_ == o.levels_;
  }

 private:
  int rows_ = 0;
  int cols_ = 0;
  int levels_ = 0;
  std::vector<Band> bands_;
};

struct WaveletCoeffs {
  std::vector<cplx> data;
  SubbandMap map;

  std::span<cplx> band(int id) { return std::span<cplx>(data).subspan(map.band(id).offset, map.band(id).count()); }
  std::span<const cplx> band(int id) const {
    return std::span<const cplx>(data).subspan(map.band(id).offset, map.band(id).count());
  }
};

/// Orthonormal periodic 2-D analysis. Rows and cols must be divisible by 2^levels.
WaveletCoeffs dwt2(const ComplexImage& img, int levels = kDefaultLevels);

/// Synthesis; exact inverse and adjoint of dwt2.
ComplexImage idwt2(const WaveletCoeffs& coeffs);

/// Applies the entrywise-squared analysis matrix: out_j = sum_i |Psi_ji|^2 img_i.
/// Every row of Psi is a periodic translate of its band's separable atom, so this
/// is a strided circular correlation with the squared atom per band.
WaveletCoeffs squared_filter_dwt2(const ComplexImage& img, int levels = kDefaultLevels);

/// |fft2c(atom_b)|^2 for one representative atom per band (index = band id). Each
/// map is non-negative and sums to 1.
std::vector<RealImage> subband_power_spectra(int rows, int cols, int levels = kDefaultLevels);

/// Periodic synthesis atom of band `band_id` translated to band position (0, 0).
ComplexImage band_atom(const SubbandMap& map, int band_id);

/// Broadcasts one value per band to a per-coefficient vector.
std::vector<double> broadcast_bands(const SubbandMap& map, const std::vector<double>& per_band);

}  // namespace pvdamp
