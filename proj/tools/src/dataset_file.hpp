#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "proxymotion/synthesis.hpp"

namespace proxymotion::cli {

// dataset.json: {"format": "proxymotion-dataset", "version": 1, "items": [...]}
// where each item carries label, level and the boxes.json / motion.json
// documents inline.
std::string serialize_dataset(const std::vector<DatasetItem>& items);
std::vector<DatasetItem> parse_dataset(std::string_view content);

}  // namespace proxymotion::cli
