#include "pvdamp/array_file.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <nlohmann/json.hpp>

namespace pvdamp {
namespace fs = std::filesystem;
using nlohmann::json;

static_assert(std::endian::native == std::endian::little, "payload encoding assumes a little-endian host");

std::size_t ArrayFile::element_count() const {
  std::size_t n = 1;
  for (auto d : shape) n *= static_cast<std::size_t>(d);
  return n;
}

std::string dtype_name(DType dtype) { return dtype == DType::complex64 ? "complex64" : "float64"; }

std::size_t dtype_size(DType) { return 8; }  // complex64 and float64 are both 8 bytes

namespace {

fs::path stem_of(const fs::path& path) {
  auto ext = path.extension();
  if (ext == ".json" || ext == ".bin") return fs::path(path).replace_extension();
  return path;
}

DType parse_dtype(const std::string& name) {
  if (name == "complex64") return DType::complex64;
  if (name == "float64") return DType::float64;
  throw ValidationError("unknown dtype '" + name + "'");
}

}  // namespace

fs::path header_path(const fs::path& path) { return fs::path(stem_of(path)).concat(".json"); }
fs::path payload_path(const fs::path& path) { return fs::path(stem_of(path)).concat(".bin"); }

void save_array(const fs::path& path, const ArrayFile& array) {
  require(!array.shape.empty(), "array shape must not be empty");
  for (auto d : array.shape) require(d > 0, "array dimensions must be positive");
  const std::size_t n = array.element_count();
  if (array.dtype == DType::complex64)
    require(array.complex_values.size() == n, "complex payload length does not match shape");
  else
    require(array.real_values.size() == n, "real payload length does not match shape");

  json header = {{"shape", array.shape}, {"dtype", dtype_name(array.dtype)}, {"order", "row-major"}};
  std::ofstream hdr(header_path(path));
  require(static_cast<bool>(hdr), "cannot open " + header_path(path).string() + " for writing");
  hdr << header.dump(2) << "\n";

  std::vector<char> bytes(n * dtype_size(array.dtype));
  if (array.dtype == DType::complex64) {
    for (std::size_t i = 0; i < n; ++i) {
      const float pair[2] = {static_cast<float>(array.complex_values[i].real()),
                             static_cast<float>(array.complex_values[i].imag())};
      std::memcpy(bytes.data() + 8 * i, pair, 8);
    }
  } else {
    std::memcpy(bytes.data(), array.real_values.data(), bytes.size());
  }
  std::ofstream bin(payload_path(path), std::ios::binary);
  require(static_cast<bool>(bin), "cannot open " + payload_path(path).string() + " for writing");
  bin.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

ArrayFile load_array(const fs::path& path) {
  std::ifstream hdr(header_path(path));
  require(static_cast<bool>(hdr), "cannot open " + header_path(path).string());
  json header;
  try {
    header = json::parse(hdr);
  } catch (const json::exception& e) {
    throw ValidationError("malformed array header " + header_path(path).string() + ": " + e.what());
  }
  require(header.contains("shape") && header.contains("dtype"), "array header missing shape or dtype");
  if (header.contains("order")) require(header["order"] == "row-major", "unsupported array order");

  ArrayFile out;
  out.dtype = parse_dtype(header["dtype"].get<std::string>());
  out.shape = header["shape"].get<std::vector<std::int64_t>>();
  require(!out.shape.empty(), "array shape must not be empty");
  for (auto d : out.shape) require(d > 0, "array dimensions must be positive");

  std::ifstream bin(payload_path(path), std::ios::binary);
  require(static_cast<bool>(bin), "cannot open " + payload_path(path).string());
  std::vector<char> bytes((std::istreambuf_iterator<char>(bin)), std::istreambuf_iterator<char>());
  const std::size_t n = out.element_count();
  const std::size_t expected = n * dtype_size(out.dtype);
  if (bytes.size() < expected) throw ValidationError("truncated payload: expected " + std::to_string(expected) +
                                                     " bytes, found " + std::to_string(bytes.size()));
  if (bytes.size() > expected) throw ValidationError("payload longer than header shape: expected " +
                                                     std::to_string(expected) + " bytes, found " +
                                                     std::to_string(bytes.size()));
  if (out.dtype == DType::complex64) {
    out.complex_values.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      float pair[2];
      std::memcpy(pair, bytes.data() + 8 * i, 8);
      out.complex_values[i] = cplx(pair[0], pair[1]);
    }
  } else {
    out.real_values.resize(n);
    std::memcpy(out.real_values.data(), bytes.data(), expected);
  }
  return out;
}

void save_image(const fs::path& path, const ComplexImage& img) {
  save_array(path, ArrayFile{{img.rows(), img.cols()}, DType::complex64, img.values(), {}});
}

void save_real(const fs::path& path, const RealImage& img) {
  save_array(path, ArrayFile{{img.rows(), img.cols()}, DType::float64, {}, img.values()});
}

void save_stack(const fs::path& path, const MultiCoilArray& stack) {
  save_array(path, ArrayFile{{stack.coils(), stack.rows(), stack.cols()}, DType::complex64, stack.values(), {}});
}

ComplexImage load_image(const fs::path& path) {
  auto a = load_array(path);
  require(a.dtype == DType::complex64 && a.shape.size() == 2, path.string() + ": expected a 2-D complex64 array");
  return ComplexImage(static_cast<int>(a.shape[0]), static_cast<int>(a.shape[1]), std::move(a.complex_values));
}

RealImage load_real(const fs::path& path) {
  auto a = load_array(path);
  require(a.dtype == DType::float64 && a.shape.size() == 2, path.string() + ": expected a 2-D float64 array");
  return RealImage(static_cast<int>(a.shape[0]), static_cast<int>(a.shape[1]), std::move(a.real_values));
}

MultiCoilArray load_stack(const fs::path& path) {
  auto a = load_array(path);
  require(a.dtype == DType::complex64 && a.shape.size() == 3, path.string() + ": expected a 3-D complex64 array");
  return MultiCoilArray(static_cast<int>(a.shape[0]), static_cast<int>(a.shape[1]), static_cast<int>(a.shape[2]),
                        std::move(a.complex_values));
}

}  // namespace pvdamp
