#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

namespace a3d {

inline constexpr const char* kToolName = "a3d";
inline constexpr const char* kToolVersion = "1.0.0";

// Every command writes a manifest next to its outputs: the command name and
// its fully resolved configuration, with no timestamps or host state, so
// `a3d replay <manifest>` reproduces the outputs byte for byte.
struct RunManifest {
  std::string command;
  nlohmann::json config;

  void save(const std::filesystem::path& path) const;
  static RunManifest load(const std::filesystem::path& path);
};

}  // namespace a3d
