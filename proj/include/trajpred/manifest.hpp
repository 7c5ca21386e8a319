#pragma once

#include <chrono>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "trajpred/common.hpp"
#include "trajpred/model.hpp"

namespace trajpred {

namespace detail {

inline std::string read_git_hash() {
  namespace fs = std::filesystem;
  fs::path dir = fs::current_path();
  for (int up = 0; up < 6; ++up) {
    const fs::path head = dir / ".git" / "HEAD";
    if (fs::exists(head)) {
      std::ifstream in(head);
      std::string line;
      std::getline(in, line);
      if (line.rfind("ref: ", 0) == 0) {
        std::ifstream ref(dir / ".git" / line.substr(5));
        std::string hash;
        if (ref && std::getline(ref, hash)) return hash;
        return "unknown";
      }
      return line.empty() ? "unknown" : line;
    }
    if (!dir.has_parent_path() || dir.parent_path() == dir) break;
    dir = dir.parent_path();
  }
  return "unknown";
}

}  // namespace detail

// One JSON manifest per run: what ran, with which config and seed, and how
// the config deviates from the reference training setup.
inline void write_manifest(const std::filesystem::path& path, const std::string& command,
                           const ModelConfig& cfg, std::uint64_t seed,
                           const std::vector<std::string>& extra = {}) {
  nlohmann::ordered_json j;
  j["command"] = command;
  j["seed"] = seed;
  j["config"] = cfg.to_json();
  j["config_hash"] = cfg.hash();
  j["deviations_from_reference"] = cfg.deviations_from_reference();
  const auto now = std::chrono::system_clock::now();
  j["unix_time"] = std::chrono::duration_cast<std::chrono::seconds>(now.time_since_epoch()).count();
  j["git_hash"] = detail::read_git_hash();
  if (!extra.empty()) j["notes"] = extra;
  std::filesystem::create_directories(path.parent_path().empty() ? "." : path.parent_path());
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write manifest " + path.string());
  out << j.dump(1) << "\n";
}

}  // namespace trajpred
