#pragma once

#include <array>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include <nlohmann/json.hpp>

#include "stjigsaw/version.hpp"

namespace stj {

inline std::string git_describe() {
  std::array<char, 128> buf{};
  std::string out;
  FILE* pipe = popen("git describe --always --dirty 2>/dev/null", "r");
  if (!pipe) return "unknown";
  while (fgets(buf.data(), buf.size(), pipe)) out += buf.data();
  pclose(pipe);
  while (!out.empty() && (out.back() == '\n' || out.back() == '\r')) out.pop_back();
  return out.empty() ? "unknown" : out;
}

/// Writes manifest.json beside a command's outputs: the exact config
/// snapshot, code revision and timing, so every output directory is
/// self-describing.
inline void write_manifest(const std::filesystem::path& out_dir, const std::string& command,
                           const nlohmann::json& config_snapshot, double duration_s,
                           const nlohmann::json& extra = nlohmann::json::object()) {
  nlohmann::json m;
  m["command"] = command;
  m["tool_version"] = kVersion;
  m["git"] = git_describe();
  m["config"] = config_snapshot;
  m["duration_s"] = duration_s;
  const auto now = std::chrono::system_clock::now();
  m["finished_unix"] =
      std::chrono::duration_cast<std::chrono::seconds>(now.time_since_epoch()).count();
  for (auto it = extra.begin(); it != extra.end(); ++it) m[it.key()] = it.value();
  std::ofstream out(out_dir / "manifest.json");
  out << m.dump(2) << '\n';
}

}  // namespace stj
