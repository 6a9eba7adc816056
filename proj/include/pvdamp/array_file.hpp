#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "pvdamp/core.hpp"

namespace pvdamp {

// On-disk array: `<stem>.json` header {shape, dtype, order} plus a `<stem>.bin`
// little-endian payload. complex64 stores interleaved (re, im) float32 pairs;
// float64 stores one double per element.

enum class DType { complex64, float64 };

struct ArrayFile {
  std::vector<std::int64_t> shape;
  DType dtype = DType::complex64;
  std::vector<cplx> complex_values;  // used when dtype == complex64
  std::vector<double> real_values;   // used when dtype == float64

  std::size_t element_count() const;
};

std::string dtype_name(DType dtype);
std::size_t dtype_size(DType dtype);

/// `path` may be given with or without the .json/.bin extension.
void save_array(const std::filesystem::path& path, const ArrayFile& array);
ArrayFile load_array(const std::filesystem::path& path);

std::filesystem::path header_path(const std::filesystem::path& path);
std::filesystem::path payload_path(const std::filesystem::path& path);

// Typed conveniences. Complex data goes through float32, so values written this
// way round-trip only to single precision.
void save_image(const std::filesystem::path& path, const ComplexImage& img);
void save_real(const std::filesystem::path& path, const RealImage& img);
void save_stack(const std::filesystem::path& path, const MultiCoilArray& stack);
ComplexImage load_image(const std::filesystem::path& path);
RealImage load_real(const std::filesystem::path& path);
MultiCoilArray load_stack(const std::filesystem::path& path);

}  // namespace pvdamp
