#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace hoidet {

inline constexpr const char* kToolVersion = "0.1.0";

/// Provenance record written next to a stage's outputs before they are
/// produced. Holds no timestamps or thread counts, so identical runs write
/// identical manifests.
struct RunManifest {
  std::string command;
  std::map<std::string, std::string> config;  // every output-affecting option, stringified
  std::map<std::string, std::uint64_t> seeds;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;

  /// FNV-1a 64 of the canonical (command, config, seeds, inputs) text, hex.
  [[nodiscard]] std::string config_hash() const;
  [[nodiscard]] std::string to_json() const;
};

/// Where the manifest of an output goes: <dir>/manifest.json for a
/// directory output, <file>.manifest.json otherwise.
[[nodiscard]] std::filesystem::path manifest_path(const std::filesystem::path& output, bool is_dir);

void write_manifest(const RunManifest& manifest, const std::filesystem::path& path);

}  // namespace hoidet
