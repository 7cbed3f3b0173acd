#pragma once

#include <filesystem>

#include <nlohmann/json.hpp>

#include "proxymotion/denoiser.hpp"

namespace proxymotion {

inline constexpr const char* kManifestFile = "manifest.json";
inline constexpr const char* kPayloadFile = "params.bin";

/// Parameter container: manifest.json names each block (name, rows, cols,
/// offset in floats) and params.bin holds every value as a little-endian
/// float32, blocks back to back. extra is merged into the manifest.
void save_params(const nn::ParamStore& store, const std::filesystem::path& dir, const nlohmann::json& extra = {});
/// Loads values into store. Every block of store must be present in the
/// manifest with the same shape.
nlohmann::json load_params(nn::ParamStore& store, const std::filesystem::path& dir);

/// Model checkpoint: the parameter container plus the model config,
/// normalization statistics and an echo of the training config.
void save_checkpoint(const MotionModel& model, const std::filesystem::path& dir, const nlohmann::json& training = {});
MotionModel load_checkpoint(const std::filesystem::path& dir);

/// Rounds every parameter to float32 precision, the precision a checkpoint
/// keeps.
void round_to_float(nn::ParamStore& store);

}  // namespace proxymotion
