#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "pvdamp/errors.hpp"

namespace pvdamp {

using cplx = std::complex<double>;

/// Dense row-major 2-D array.
template <typename T>
class Grid {
 public:
  Grid() = default;
  Grid(int rows, int cols, T fill = T{}) : rows_(rows), cols_(cols) {
    require(rows > 0 && cols > 0, "grid dimensions must be positive");
    data_.assign(static_cast<std::size_t>(rows) * cols, fill);
  }
  Grid(int rows, int cols, std::vector<T> values) : rows_(rows), cols_(cols), data_(std::move(values)) {
    require(rows > 0 && cols > 0, "grid dimensions must be positive");
    require(data_.size() == static_cast<std::size_t>(rows) * cols, "grid data length does not match shape");
  }

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool same_shape(const Grid& other) const { return rows_ == other.rows_ && cols_ == other.cols_; }

  T& operator()(int r, int c) { return data_[static_cast<std::size_t>(r) * cols_ + c]; }
  const T& operator()(int r, int c) const { return data_[static_cast<std::size_t>(r) * cols_ + c]; }
  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  std::span<T> span() { return data_; }
  std::span<const T> span() const { return data_; }
  std::vector<T>& values() { return data_; }
  const std::vector<T>& values() const { return data_; }

  bool operator==(const Grid&) const = default;

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<T> data_;
};

using ComplexImage = Grid<cplx>;
using RealImage = Grid<double>;

/// Stack of same-shaped complex images, shape (N_c, H, W). Holds per-coil k-space
/// data and coil sensitivity maps.
class MultiCoilArray {
 public:
  MultiCoilArray() = default;
  MultiCoilArray(int coils, int rows, int cols);
  MultiCoilArray(int coils, int rows, int cols, std::vector<cplx> values);

  int coils() const { return coils_; }
  int rows() const { return rows_; }
  int cols() const { return cols_; }
  std::size_t pixels() const { return static_cast<std::size_t>(rows_) * cols_; }
  std::size_t size() const { return data_.size(); }

  std::span<cplx> coil(int c) { return std::span<cplx>(data_).subspan(c * pixels(), pixels()); }
  std::span<const cplx> coil(int c) const { return std::span<const cplx>(data_).subspan(c * pixels(), pixels()); }
  ComplexImage coil_image(int c) const;
  void set_coil(int c, const ComplexImage& img);

  cplx& at(int c, std::size_t pixel) { return data_[c * pixels() + pixel]; }
  const cplx& at(int c, std::size_t pixel) const { return data_[c * pixels() + pixel]; }

  std::vector<cplx>& values() { return data_; }
  const std::vector<cplx>& values() const { return data_; }

  bool operator==(const MultiCoilArray&) const = default;

 private:
  int coils_ = 0;
  int rows_ = 0;
  int cols_ = 0;
  std::vector<cplx> data_;
};

using MultiCoilKSpace = MultiCoilArray;

bool all_finite(std::span<const cplx> values);
bool all_finite(std::span<const double> values);

/// Throws ValidationError unless both dimensions are even.
void require_even_shape(int rows, int cols);

/// Working image shape for the reconstruction pipeline: even and at least 8x8.
void require_image_shape(int rows, int cols);

double norm2(std::span<const cplx> values);
double squared_norm(std::span<const cplx> values);
cplx inner(std::span<const cplx> a, std::span<const cplx> b);  // sum conj(a) * b

}  // namespace pvdamp
