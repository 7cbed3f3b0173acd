#include "run_manifest.hpp"

#include <Eigen/Core>
#include <spdlog/version.h>

#include <cstdio>

#include "proxymotion/io.hpp"

#ifndef PROXYMOTION_VERSION
#define PROXYMOTION_VERSION "unknown"
#endif

namespace proxymotion::cli {

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

RunManifest::RunManifest(std::string command) : command_(std::move(command)) {}

void RunManifest::add_input(const std::filesystem::path& path) {
  nlohmann::json entry{{"path", path.string()}};
  if (std::filesystem::is_regular_file(path)) {
    entry["fnv1a64"] = hex64(fnv1a64(read_file(path)));
  } else if (std::filesystem::is_directory(path)) {
    // Checkpoint directories: hash the fixed member files in name order.
    nlohmann::json members = nlohmann::json::object();
    for (const char* name : {"manifest.json", "params.bin"}) {
      if (std::filesystem::exists(path / name)) members[name] = hex64(fnv1a64(read_file(path / name)));
    }
    entry["fnv1a64"] = std::move(members);
  }
  inputs_.push_back(std::move(entry));
}

void RunManifest::set_config(nlohmann::json config) { config_ = std::move(config); }

nlohmann::json RunManifest::to_json() const {
  nlohmann::json j;
  j["tool"] = "proxymotion";
  j["command"] = command_;
  j["inputs"] = inputs_;
  j["config"] = config_;
  j["config_hash"] = "fnv1a64:" + hex64(fnv1a64(config_.dump()));
  j["seed"] = seed_ ? nlohmann::json(*seed_) : nlohmann::json(nullptr);
  j["outputs"] = outputs_;
  j["versions"] = {
      {"proxymotion", PROXYMOTION_VERSION},
      {"file_format", kFormatVersion},
      {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                    std::to_string(EIGEN_MINOR_VERSION)},
      {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." + std::to_string(NLOHMANN_JSON_VERSION_MINOR) +
                            "." + std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
      {"spdlog", std::to_string(SPDLOG_VER_MAJOR) + "." + std::to_string(SPDLOG_VER_MINOR) + "." +
                     std::to_string(SPDLOG_VER_PATCH)},
  };
  return j;
}

}  // namespace proxymotion::cli
