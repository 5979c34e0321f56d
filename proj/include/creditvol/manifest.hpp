#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

#include "json.hpp"

namespace creditvol {

std::string sha256_file(const std::filesystem::path& path);
std::string sha256_bytes(std::string_view bytes);

const char* library_version();

struct RunManifest {
  std::string command;
  nlohmann::json config = nlohmann::json::object();
  std::map<std::string, std::uint64_t> seeds;
  // path (as given) -> hex digest
  std::map<std::string, std::string> inputs;
  // file name relative to the output directory -> hex digest
  std::map<std::string, std::string> outputs;
  std::string version = library_version();
  double duration_seconds = 0.0;

  nlohmann::json to_json() const;
  static RunManifest from_json(const nlohmann::json& j);

  void add_input(const std::filesystem::path& path);
  void add_output(const std::filesystem::path& out_dir, const std::string& name);
};

inline constexpr const char* kManifestName = "manifest.json";

void write_manifest(const std::filesystem::path& out_dir, const RunManifest& m);
RunManifest read_manifest(const std::filesystem::path& out_dir);

struct ManifestCheck {
  bool ok = true;
  std::vector<std::string> mismatches;
};

// Recomputes every recorded digest (inputs relative to the working directory,
// outputs relative to out_dir).
ManifestCheck verify_manifest(const std::filesystem::path& out_dir);

}  // namespace creditvol
