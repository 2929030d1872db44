#include "hoidet/manifest.hpp"

#include <cstdio>

#include <json.hpp>

#include "hoidet/text_io.hpp"

namespace hoidet {

namespace {

nlohmann::ordered_json canonical(const RunManifest& m) {
  nlohmann::ordered_json j;
  j["command"] = m.command;
  j["config"] = nlohmann::ordered_json::object();
  for (const auto& [k, v] : m.config) j["config"][k] = v;
  j["seeds"] = nlohmann::ordered_json::object();
  for (const auto& [k, v] : m.seeds) j["seeds"][k] = v;
  j["inputs"] = m.inputs;
  return j;
}

}  // namespace

std::string RunManifest::config_hash() const {
  const std::string text = canonical(*this).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string RunManifest::to_json() const {
  auto j = canonical(*this);
  j["outputs"] = outputs;
  j["config_hash"] = config_hash();
  j["tool_version"] = kToolVersion;
  return j.dump(2) + "\n";
}

std::filesystem::path manifest_path(const std::filesystem::path& output, bool is_dir) {
  if (is_dir) return output / "manifest.json";
  auto p = output;
  p += ".manifest.json";
  return p;
}

void write_manifest(const RunManifest& manifest, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  text::write_file(path, manifest.to_json());
}

}  // namespace hoidet
