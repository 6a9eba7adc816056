#include "manifest.hpp"

#include <openssl/evp.h>

#include <array>
#include <fstream>
#include <iomanip>
#include <memory>
#include <sstream>

#include "pvdamp/array_file.hpp"
#include "pvdamp/errors.hpp"

namespace pvdamp::cli {

namespace fs = std::filesystem;

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), "cannot open " + path.string() + " for hashing");

  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("SHA-256 initialisation failed");
  std::array<char, 1 << 16> buf{};
  while (in) {
    in.read(buf.data(), buf.size());
    if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), digest.data(), &len);

  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
  return hex.str();
}

std::vector<fs::path> artifact_files(const fs::path& path) {
  if (fs::is_regular_file(path) && path.extension() != ".json" && path.extension() != ".bin") return {path};
  auto hdr = header_path(path);
  auto bin = payload_path(path);
  if (fs::is_regular_file(hdr) && fs::is_regular_file(bin)) return {hdr, bin};
  if (fs::is_regular_file(path)) return {path};
  throw ValidationError("no such file or array: " + path.string());
}

fs::path manifest_path(const fs::path& primary_output) {
  auto stem = primary_output.filename();
  if (stem.has_extension()) stem = stem.stem();
  return primary_output.parent_path() / (stem.string() + ".manifest.json");
}

namespace {

nlohmann::json describe(const fs::path& path) {
  nlohmann::json hashes = nlohmann::json::object();
  for (const auto& f : artifact_files(path)) hashes[f.filename().string()] = sha256_file(f);
  return {{"path", path.string()}, {"sha256", hashes}};
}

}  // namespace

void RunManifest::add_input(const std::string& role, const fs::path& path) { inputs[role] = describe(path); }

void RunManifest::add_output(const std::string& role, const fs::path& path) { outputs[role] = describe(path); }

nlohmann::json RunManifest::to_json() const {
  return {{"tool", tool},     {"version", version}, {"command", command}, {"argv", argv},       {"config", config},
          {"seeds", seeds},   {"inputs", inputs},   {"outputs", outputs}, {"results", results}};
}

RunManifest RunManifest::from_json(const nlohmann::json& j) {
  RunManifest m;
  m.tool = j.at("tool").get<std::string>();
  m.version = j.at("version").get<std::string>();
  m.command = j.at("command").get<std::string>();
  m.argv = j.at("argv").get<std::vector<std::string>>();
  m.config = j.value("config", nlohmann::json::object());
  m.seeds = j.value("seeds", nlohmann::json::object());
  m.inputs = j.value("inputs", nlohmann::json::object());
  m.outputs = j.value("outputs", nlohmann::json::object());
  m.results = j.value("results", nlohmann::json::object());
  return m;
}

void RunManifest::write(const fs::path& path) const {
  std::ofstream out(path);
  require(static_cast<bool>(out), "cannot open " + path.string() + " for writing");
  out << to_json().dump(2) << '\n';
}

}  // namespace pvdamp::cli
