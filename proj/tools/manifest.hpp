#pragma once

#include <filesystem>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

namespace pvdamp::cli {

/// Hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);

/// The files behind an output name: `<stem>.json` + `<stem>.bin` for arrays,
/// otherwise the path itself.
std::vector<std::filesystem::path> artifact_files(const std::filesystem::path& path);

/// `<dir>/<stem>.manifest.json` for an output path with or without extension.
std::filesystem::path manifest_path(const std::filesystem::path& primary_output);

struct RunManifest {
  std::string tool = "pvdamp";
  std::string version;
  std::string command;
  std::vector<std::string> argv;
  nlohmann::json config = nlohmann::json::object();
  nlohmann::json seeds = nlohmann::json::object();
  nlohmann::json inputs = nlohmann::json::object();   // role -> {path, sha256: {file: hash}}
  nlohmann::json outputs = nlohmann::json::object();  // role -> {path, sha256: {file: hash}}
  nlohmann::json results = nlohmann::json::object();  // small scalar summaries

  void add_input(const std::string& role, const std::filesystem::path& path);
  void add_output(const std::string& role, const std::filesystem::path& path);

  nlohmann::json to_json() const;
  static RunManifest from_json(const nlohmann::json& j);
  void write(const std::filesystem::path& path) const;
};

}  // namespace pvdamp::cli
