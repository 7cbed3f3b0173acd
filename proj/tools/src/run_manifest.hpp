#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace proxymotion::cli {

std::uint64_t fnv1a64(std::string_view bytes);
std::string hex64(std::uint64_t v);

/// Machine-readable record of one invocation. Holds no timestamps, so
/// identical inputs and seed give an identical manifest.
class RunManifest {
 public:
  explicit RunManifest(std::string command);

  void add_input(const std::filesystem::path& path);
  void set_config(nlohmann::json config);
  void set_seed(std::uint64_t seed) { seed_ = seed; }
  void add_output(const std::filesystem::path& path) { outputs_.push_back(path.string()); }

  nlohmann::json to_json() const;

 private:
  std::string command_;
  nlohmann::json inputs_ = nlohmann::json::array();
  nlohmann::json config_ = nlohmann::json::object();
  std::optional<std::uint64_t> seed_;
  std::vector<std::string> outputs_;
};

}  // namespace proxymotion::cli
