#pragma once

#include <nlohmann/json.hpp>

#include "proxymotion/denoiser.hpp"
#include "proxymotion/geometry.hpp"
#include "proxymotion/guidance.hpp"
#include "proxymotion/synthesis.hpp"
#include "proxymotion/training.hpp"

namespace proxymotion {

// JSON views of every module config. Readers start from the defaults, take
// the keys that are present and reject unknown keys with SchemaError.

nlohmann::json to_json(const FilterConfig& c);
nlohmann::json to_json(const NormalizeConfig& c);
nlohmann::json to_json(const AugmentConfig& c);
nlohmann::json to_json(const ProceduralConfig& c);
nlohmann::json to_json(const DiffusionConfig& c);
nlohmann::json to_json(const EncoderConfig& c);
nlohmann::json to_json(const ModelConfig& c);
nlohmann::json to_json(const GuidanceConfig& c);
nlohmann::json to_json(const TrainConfig& c);

void from_json(const nlohmann::json& j, FilterConfig& c);
void from_json(const nlohmann::json& j, NormalizeConfig& c);
void from_json(const nlohmann::json& j, AugmentConfig& c);
void from_json(const nlohmann::json& j, ProceduralConfig& c);
void from_json(const nlohmann::json& j, DiffusionConfig& c);
void from_json(const nlohmann::json& j, EncoderConfig& c);
void from_json(const nlohmann::json& j, ModelConfig& c);
void from_json(const nlohmann::json& j, GuidanceConfig& c);
void from_json(const nlohmann::json& j, TrainConfig& c);

/// Parses text as JSON, mapping syntax errors to SchemaError.
nlohmann::json parse_json(std::string_view text);

}  // namespace proxymotion
