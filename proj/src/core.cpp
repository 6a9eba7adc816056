#include "pvdamp/core.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace pvdamp {

MultiCoilArray::MultiCoilArray(int coils, int rows, int cols) : coils_(coils), rows_(rows), cols_(cols) {
  require(coils > 0 && rows > 0 && cols > 0, "multi-coil array dimensions must be positive");
  data_.assign(static_cast<std::size_t>(coils) * rows * cols, cplx{});
}

MultiCoilArray::MultiCoilArray(int coils, int rows, int cols, std::vector<cplx> values)
    : coils_(coils), rows_(rows), cols_(cols), data_(std::move(values)) {
  require(coils > 0 && rows > 0 && cols > 0, "multi-coil array dimensions must be positive");
  require(data_.size() == static_cast<std::size_t>(coils) * rows * cols,
          "multi-coil data length does not match shape");
}

ComplexImage MultiCoilArray::coil_image(int c) const {
  auto s = coil(c);
  return ComplexImage(rows_, cols_, std::vector<cplx>(s.begin(), s.end()));
}

void MultiCoilArray::set_coil(int c, const ComplexImage& img) {
  require(img.rows() == rows_ && img.cols() == cols_, "coil image shape mismatch");
  auto dst = coil(c);
  std::copy(img.values().begin(), img.values().end(), dst.begin());
}

bool all_finite(std::span<const cplx> values) {
  for (const auto& v : values)
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return false;
  return true;
}

bool all_finite(std::span<const double> values) {
  for (double v : values)
    if (!std::isfinite(v)) return false;
  return true;
}

void require_even_shape(int rows, int cols) {
  require(rows > 0 && cols > 0 && rows % 2 == 0 && cols % 2 == 0,
          "image dimensions must be even, got " + std::to_string(rows) + "x" + std::to_string(cols));
}

void require_image_shape(int rows, int cols) {
  require_even_shape(rows, cols);
  require(rows >= 8 && cols >= 8,
          "image dimensions must be at least 8x8, got " + std::to_string(rows) + "x" + std::to_string(cols));
}

double squared_norm(std::span<const cplx> values) {
  double acc = 0.0;
  for (const auto& v : values) acc += std::norm(v);
  return acc;
}

double norm2(std::span<const cplx> values) { return std::sqrt(squared_norm(values)); }

cplx inner(std::span<const cplx> a, std::span<const cplx> b) {
  require(a.size() == b.size(), "inner product length mismatch");
  cplx acc{};
  for (std::size_t i = 0; i < a.size(); ++i) acc += std::conj(a[i]) * b[i];
  return acc;
}

}  // namespace pvdamp
