#include "pvdamp/fft.hpp"

#include <fftw3.h>

#include <cmath>
#include <map>
#include <mutex>
#include <tuple>
#include <utility>

namespace pvdamp {
namespace {

// FFTW planning is not thread-safe, execution is. Plans are made once per
// (shape, direction) on aligned scratch buffers and executed with the new-array
// interface on fftw_malloc'd copies.
class PlanCache {
 public:
  static PlanCache& instance() {
    static PlanCache cache;
    return cache;
  }

  fftw_plan get(int rows, int cols, int sign) {
    std::lock_guard<std::mutex> lock(mutex_);
    auto key = std::make_tuple(rows, cols, sign);
    auto it = plans_.find(key);
    if (it != plans_.end()) return it->second;
    auto* buf = fftw_alloc_complex(static_cast<std::size_t>(rows) * cols);
    fftw_plan plan = fftw_plan_dft_2d(rows, cols, buf, buf, sign, FFTW_ESTIMATE);
    fftw_free(buf);
    plans_.emplace(key, plan);
    return plan;
  }

  ~PlanCache() {
    for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
  }

 private:
  std::mutex mutex_;
  std::map<std::tuple<int, int, int>, fftw_plan> plans_;
};

struct AlignedBuffer {
  explicit AlignedBuffer(std::size_t n) : ptr(fftw_alloc_complex(n)) {}
  ~AlignedBuffer() { fftw_free(ptr); }
  AlignedBuffer(const AlignedBuffer&) = delete;
  AlignedBuffer& operator=(const AlignedBuffer&) = delete;
  fftw_complex* ptr;
};

// For even sizes fftshift and ifftshift coincide: a half-period circular shift.
void transform(std::span<cplx> data, int rows, int cols, int sign) {
  require_even_shape(rows, cols);
  require(data.size() == static_cast<std::size_t>(rows) * cols, "fft buffer length does not match shape");
  require(all_finite(std::span<const cplx>(data)), "fft input contains non-finite values");

  const std::size_t n = data.size();
  const int hr = rows / 2;
  const int hc = cols / 2;
  AlignedBuffer buf(n);
  auto* z = reinterpret_cast<cplx*>(buf.ptr);
  for (int r = 0; r < rows; ++r) {
    const int sr = (r + hr) % rows;
    for (int c = 0; c < cols; ++c) z[static_cast<std::size_t>(sr) * cols + (c + hc) % cols] = data[r * cols + c];
  }
  fftw_execute_dft(PlanCache::instance().get(rows, cols, sign), buf.ptr, buf.ptr);
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  for (int r = 0; r < rows; ++r) {
    const int sr = (r + hr) % rows;
    for (int c = 0; c < cols; ++c) data[static_cast<std::size_t>(sr) * cols + (c + hc) % cols] = z[r * cols + c] * scale;
  }
}

}  // namespace

void fft2c_inplace(std::span<cplx> data, int rows, int cols) { transform(data, rows, cols, FFTW_FORWARD); }

void ifft2c_inplace(std::span<cplx> data, int rows, int cols) { transform(data, rows, cols, FFTW_BACKWARD); }

ComplexImage fft2c(const ComplexImage& img) {
  ComplexImage out = img;
  fft2c_inplace(out.span(), out.rows(), out.cols());
  return out;
}

ComplexImage ifft2c(const ComplexImage& ksp) {
  ComplexImage out = ksp;
  ifft2c_inplace(out.span(), out.rows(), out.cols());
  return out;
}

}  // namespace pvdamp
