#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "priorreg/errors.hpp"

namespace priorreg {

inline constexpr const char* kToolVersion = "0.1.0";

/// FNV-1a over the file bytes, reported as 16 hex digits. Enough to tell
/// whether an input file changed between runs.
inline std::string fnv1a64_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw data_error("cannot open " + path);
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  char buffer[4096];
  while (in.read(buffer, sizeof buffer) || in.gcount() > 0) {
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      hash ^= static_cast<unsigned char>(buffer[i]);
      hash *= 0x100000001b3ULL;
    }
  }
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016llx",
                static_cast<unsigned long long>(hash));
  return hex;
}

/// Provenance record written before any computation starts: what ran, with
/// which resolved configuration and seed, on which input bytes, and where
/// the outputs will land.
struct RunManifest {
  std::string subcommand;
  nlohmann::json resolved_config;
  std::uint64_t seed = 0;
  std::vector<std::pair<std::string, std::string>> inputs;  // path, digest
  std::vector<std::string> outputs;

  void add_input(const std::string& path) {
    inputs.emplace_back(path, fnv1a64_file(path));
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["tool_version"] = kToolVersion;
    j["subcommand"] = subcommand;
    j["config"] = resolved_config;
    j["seed"] = seed;
    nlohmann::json in = nlohmann::json::array();
    for (const auto& [path, digest] : inputs) {
      in.push_back({{"path", path}, {"digest_fnv1a64", digest}});
    }
    j["inputs"] = in;
    j["outputs"] = outputs;
    return j;
  }

  void write(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw data_error("cannot write " + path);
    out << to_json().dump(2) << '\n';
  }
};

}  // namespace priorreg
