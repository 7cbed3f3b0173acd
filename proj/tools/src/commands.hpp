#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace proxymotion::cli {

using std::filesystem::path;

// Each command returns the run manifest it wrote (or would have written).

struct FitBoxesArgs {
  path capture;
  path output;
  std::optional<path> config;
};
nlohmann::json fit_boxes(const FitBoxesArgs& a);

struct KeyframesArgs {
  path keys;
  path output;
  std::vector<int> between;
};
nlohmann::json keyframes(const KeyframesArgs& a);

struct SynthArgs {
  std::optional<path> config;
  path out_dir;
  std::optional<std::uint64_t> seed;
};
nlohmann::json synth_dataset(const SynthArgs& a);

struct TrainArgs {
  path dataset;
  path out_dir;
  std::optional<path> config;
  std::optional<std::uint64_t> seed;
  std::optional<int> steps_base;
  std::optional<int> steps_control;
};
nlohmann::json train(const TrainArgs& a);

struct GenerateArgs {
  path checkpoint;
  path output;
  std::optional<path> boxes;
  std::optional<std::string> label;
  std::uint64_t seed = 0;
  std::optional<path> config;
  std::optional<int> inner_steps;
  std::optional<double> step_scale;
};
nlohmann::json generate(const GenerateArgs& a);

struct EvalArgs {
  path motion;
  path boxes;
  std::optional<path> config;
};
/// Metrics object; printed on stdout by the caller.
nlohmann::json evaluate(const EvalArgs& a);

}  // namespace proxymotion::cli
