#include "a3d/manifest.hpp"

#include <fstream>

#include "a3d/types.hpp"

namespace a3d {

void RunManifest::save(const std::filesystem::path& path) const {
  nlohmann::json j;
  j["tool"] = kToolName;
  j["version"] = kToolVersion;
  j["command"] = command;
  j["config"] = config;
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write manifest: " + path.string());
  out << j.dump(2) << '\n';
}

RunManifest RunManifest::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open manifest: " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("manifest " + path.string() + ": " + e.what());
  }
  if (!j.contains("command") || !j.contains("config"))
    throw ValidationError("manifest " + path.string() + ": missing command or config");
  if (j.value("tool", "") != kToolName)
    throw ValidationError("manifest " + path.string() + ": not an " + kToolName + " manifest");
  RunManifest m;
  m.command = j["command"].get<std::string>();
  m.config = j["config"];
  return m;
}

}  // namespace a3d
