#pragma once

// Run manifests: what a command wrote, with SHA-256 checksums, so a rerun
// with the same configuration can be checked byte for byte.

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace bbmlab {

inline constexpr const char* kToolVersion = "0.1.0";

std::string sha256_hex(std::string_view data);
std::string sha256_file(const std::filesystem::path& path);

// Writes to a sibling temporary file and renames it into place, so readers
// never see a partial file.
void atomic_write(const std::filesystem::path& path, std::string_view content);

struct ManifestEntry {
  std::string path;  // relative to the manifest's directory
  std::string sha256;
  std::uintmax_t bytes = 0;
};

struct RunManifest {
  std::string command;
  std::string config_hash;
  std::string tool_version = kToolVersion;
  double wall_time_s = 0.0;
  nlohmann::ordered_json seeds = nlohmann::ordered_json::object();
  nlohmann::ordered_json config = nlohmann::ordered_json::object();
  nlohmann::ordered_json summary = nlohmann::ordered_json::object();
  std::vector<ManifestEntry> outputs;
};

nlohmann::ordered_json manifest_json(const RunManifest& manifest);
RunManifest parse_manifest(const nlohmann::json& j);

struct ManifestCheck {
  bool ok = true;
  std::vector<std::string> missing;
  std::vector<std::string> mismatched;
};

// Recomputes every listed checksum. Throws Error when the manifest itself is
// unreadable.
ManifestCheck verify_manifest(const std::filesystem::path& manifest_path);

}  // namespace bbmlab
