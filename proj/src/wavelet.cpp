#include "pvdamp/wavelet.hpp"

#include <algorithm>
#include <cmath>

#include "pvdamp/fft.hpp"

namespace pvdamp {
namespace {

constexpr int kTaps = static_cast<int>(kDb4Lowpass.size());

constexpr std::array<double, kTaps> make_highpass() {
  std::array<double, kTaps> g{};
  for (int t = 0; t < kTaps; ++t) g[t] = (t % 2 == 0 ? 1.0 : -1.0) * kDb4Lowpass[kTaps - 1 - t];
  return g;
}

constexpr std::array<double, kTaps> kDb4Highpass = make_highpass();

// Periodic one-level analysis of x[0..n) into lo[0..n/2), hi[0..n/2).
template <typename T>
void analyze(const T* x, int n, T* lo, T* hi) {
  const int half = n / 2;
  for (int k = 0; k < half; ++k) {
    T a{}, d{};
    for (int t = 0; t < kTaps; ++t) {
      const T& v = x[(2 * k + t) % n];
      a += kDb4Lowpass[t] * v;
      d += kDb4Highpass[t] * v;
    }
    lo[k] = a;
    hi[k] = d;
  }
}

// Adjoint of analyze.
template <typename T>
void synthesize(const T* lo, const T* hi, int n, T* x) {
  std::fill(x, x + n, T{});
  const int half = n / 2;
  for (int k = 0; k < half; ++k) {
    for (int t = 0; t < kTaps; ++t) {
      x[(2 * k + t) % n] += kDb4Lowpass[t] * lo[k] + kDb4Highpass[t] * hi[k];
    }
  }
}

void require_levels(int rows, int cols, int levels) {
  require(levels >= 1 && levels <= kMaxLevels, "wavelet levels must be in [1, " + std::to_string(kMaxLevels) + "]");
  const int block = 1 << levels;
  require(rows > 0 && cols > 0 && rows % block == 0 && cols % block == 0,
          "image shape " + std::to_string(rows) + "x" + std::to_string(cols) + " is not divisible by 2^" +
              std::to_string(levels));
}

// Top-left corner of a band inside the in-place pyramid layout.
std::pair<int, int> pyramid_origin(const Band& b) {
  switch (b.orientation) {
    case Orientation::LL: return {0, 0};
    case Orientation::LH: return {0, b.cols};
    case Orientation::HL: return {b.rows, 0};
    case Orientation::HH: return {b.rows, b.cols};
  }
  return {0, 0};
}

// In-place multi-level analysis of a row-major buffer into the pyramid layout.
void forward_pyramid(std::vector<cplx>& buf, int rows, int cols, int levels) {
  std::vector<cplx> line(std::max(rows, cols)), lo(line.size() / 2), hi(line.size() / 2);
  int h = rows, w = cols;
  for (int s = 0; s < levels; ++s) {
    for (int r = 0; r < h; ++r) {
      cplx* row = buf.data() + static_cast<std::size_t>(r) * cols;
      std::copy(row, row + w, line.begin());
      analyze(line.data(), w, lo.data(), hi.data());
      std::copy(lo.begin(), lo.begin() + w / 2, row);
      std::copy(hi.begin(), hi.begin() + w / 2, row + w / 2);
    }
    for (int c = 0; c < w; ++c) {
      for (int r = 0; r < h; ++r) line[r] = buf[static_cast<std::size_t>(r) * cols + c];
      analyze(line.data(), h, lo.data(), hi.data());
      for (int r = 0; r < h / 2; ++r) {
        buf[static_cast<std::size_t>(r) * cols + c] = lo[r];
        buf[static_cast<std::size_t>(r + h / 2) * cols + c] = hi[r];
      }
    }
    h /= 2;
    w /= 2;
  }
}

void inverse_pyramid(std::vector<cplx>& buf, int rows, int cols, int levels) {
  std::vector<cplx> line(std::max(rows, cols)), lo(line.size() / 2), hi(line.size() / 2);
  for (int s = levels; s >= 1; --s) {
    const int h = rows >> (s - 1);
    const int w = cols >> (s - 1);
    for (int c = 0; c < w; ++c) {
      for (int r = 0; r < h / 2; ++r) {
        lo[r] = buf[static_cast<std::size_t>(r) * cols + c];
        hi[r] = buf[static_cast<std::size_t>(r + h / 2) * cols + c];
      }
      synthesize(lo.data(), hi.data(), h, line.data());
      for (int r = 0; r < h; ++r) buf[static_cast<std::size_t>(r) * cols + c] = line[r];
    }
    for (int r = 0; r < h; ++r) {
      cplx* row = buf.data() + static_cast<std::size_t>(r) * cols;
      std::copy(row, row + w / 2, lo.begin());
      std::copy(row + w / 2, row + w, hi.begin());
      synthesize(lo.data(), hi.data(), w, line.data());
      std::copy(line.begin(), line.begin() + w, row);
    }
  }
}

// Periodic 1-D synthesis atom of length n for a coefficient at position 0 of the
// low- or high-pass channel at `scale`.
std::vector<double> atom_1d(int n, int scale, bool highpass) {
  int m = n >> scale;
  std::vector<double> zero;
  std::vector<double> lo(m, 0.0), hi(m, 0.0);
  (highpass ? hi : lo)[0] = 1.0;
  std::vector<double> out(2 * m);
  synthesize(lo.data(), hi.data(), 2 * m, out.data());
  for (int s = scale - 1; s >= 1; --s) {
    m = n >> s;
    std::vector<double> next(2 * m);
    zero.assign(m, 0.0);
    synthesize(out.data(), zero.data(), 2 * m, next.data());
    out = std::move(next);
  }
  return out;
}

struct SquaredTap {
  int offset;
  double weight;
};

std::vector<SquaredTap> squared_support(const std::vector<double>& atom) {
  std::vector<SquaredTap> taps;
  for (int t = 0; t < static_cast<int>(atom.size()); ++t) {
    const double w = atom[t] * atom[t];
    if (w != 0.0) taps.push_back({t, w});
  }
  return taps;
}

}  // namespace

std::string orientation_name(Orientation o) {
  switch (o) {
    case Orientation::LL: return "LL";
    case Orientation::LH: return "LH";
    case Orientation::HL: return "HL";
    case Orientation::HH: return "HH";
  }
  return "?";
}

SubbandMap::SubbandMap(int rows, int cols, int levels) : rows_(rows), cols_(cols), levels_(levels) {
  require_levels(rows, cols, levels);
  std::size_t offset = 0;
  auto add = [&](Orientation o, int scale) {
    Band b;
    b.id = static_cast<int>(bands_.size());
    b.orientation = o;
    b.scale = scale;
    b.offset = offset;
    b.rows = rows >> scale;
    b.cols = cols >> scale;
    offset += b.count();
    bands_.push_back(b);
  };
  add(Orientation::LL, levels);
  for (int s = 1; s <= levels; ++s) {
    add(Orientation::LH, s);
    add(Orientation::HL, s);
    add(Orientation::HH, s);
  }
}

const Band& SubbandMap::find(Orientation o, int scale) const {
  for (const auto& b : bands_)
    if (b.orientation == o && b.scale == scale) return b;
  throw ValidationError("no " + orientation_name(o) + " band at scale " + std::to_string(scale));
}

WaveletCoeffs dwt2(const ComplexImage& img, int levels) {
  SubbandMap map(img.rows(), img.cols(), levels);
  std::vector<cplx> buf = img.values();
  forward_pyramid(buf, img.rows(), img.cols(), levels);
  WaveletCoeffs out{std::vector<cplx>(map.size()), map};
  for (const auto& b : map.bands()) {
    auto [r0, c0] = pyramid_origin(b);
    std::size_t j = b.offset;
    for (int r = 0; r < b.rows; ++r)
      for (int c = 0; c < b.cols; ++c) out.data[j++] = buf[static_cast<std::size_t>(r0 + r) * img.cols() + c0 + c];
  }
  return out;
}

ComplexImage idwt2(const WaveletCoeffs& coeffs) {
  const auto& map = coeffs.map;
  require(map.levels() >= 1 && coeffs.data.size() == map.size(), "wavelet coefficients do not match their subband map");
  std::vector<cplx> buf(map.size());
  for (const auto& b : map.bands()) {
    auto [r0, c0] = pyramid_origin(b);
    std::size_t j = b.offset;
    for (int r = 0; r < b.rows; ++r)
      for (int c = 0; c < b.cols; ++c) buf[static_cast<std::size_t>(r0 + r) * map.cols() + c0 + c] = coeffs.data[j++];
  }
  inverse_pyramid(buf, map.rows(), map.cols(), map.levels());
  return ComplexImage(map.rows(), map.cols(), std::move(buf));
}

WaveletCoeffs squared_filter_dwt2(const ComplexImage& img, int levels) {
  SubbandMap map(img.rows(), img.cols(), levels);
  const int rows = img.rows();
  const int cols = img.cols();
  WaveletCoeffs out{std::vector<cplx>(map.size()), map};
  std::vector<cplx> tmp;
  for (const auto& b : map.bands()) {
    const bool vertical_high = b.orientation == Orientation::HL || b.orientation == Orientation::HH;
    const bool horizontal_high = b.orientation == Orientation::LH || b.orientation == Orientation::HH;
    const auto u = squared_support(atom_1d(rows, b.scale, vertical_high));
    const auto v = squared_support(atom_1d(cols, b.scale, horizontal_high));
    const int stride = b.stride();

    // Horizontal pass: tmp(p, k2) = sum_t v2[t] img(p, (k2*stride + t) mod cols).
    tmp.assign(static_cast<std::size_t>(rows) * b.cols, cplx{});
    for (int p = 0; p < rows; ++p)
      for (int k2 = 0; k2 < b.cols; ++k2) {
        cplx acc{};
        for (const auto& tap : v) acc += tap.weight * img(p, (k2 * stride + tap.offset) % cols);
        tmp[static_cast<std::size_t>(p) * b.cols + k2] = acc;
      }
    for (int k1 = 0; k1 < b.rows; ++k1)
      for (int k2 = 0; k2 < b.cols; ++k2) {
        cplx acc{};
        for (const auto& tap : u) acc += tap.weight * tmp[static_cast<std::size_t>((k1 * stride + tap.offset) % rows) * b.cols + k2];
        out.data[b.offset + static_cast<std::size_t>(k1) * b.cols + k2] = acc;
      }
  }
  return out;
}

ComplexImage band_atom(const SubbandMap& map, int band_id) {
  WaveletCoeffs unit{std::vector<cplx>(map.size()), map};
  unit.data[map.band(band_id).offset] = 1.0;
  return idwt2(unit);
}

std::vector<RealImage> subband_power_spectra(int rows, int cols, int levels) {
  SubbandMap map(rows, cols, levels);
  std::vector<RealImage> spectra;
  spectra.reserve(map.band_count());
  for (const auto& b : map.bands()) {
    const ComplexImage k = fft2c(band_atom(map, b.id));
    RealImage p(rows, cols);
    for (std::size_t i = 0; i < k.size(); ++i) p[i] = std::norm(k[i]);
    spectra.push_back(std::move(p));
  }
  return spectra;
}

std::vector<double> broadcast_bands(const SubbandMap& map, const std::vector<double>& per_band) {
  require(static_cast<int>(per_band.size()) == map.band_count(), "per-band vector length does not match band count");
  std::vector<double> out(map.size());
  for (const auto& b : map.bands()) std::fill(out.begin() + b.offset, out.begin() + b.end(), per_band[b.id]);
  return out;
}

}  // namespace pvdamp
