#include "dataset_file.hpp"

#include <nlohmann/json.hpp>

#include "proxymotion/config_json.hpp"
#include "proxymotion/errors.hpp"
#include "proxymotion/io.hpp"

namespace proxymotion::cli {

using nlohmann::json;

std::string serialize_dataset(const std::vector<DatasetItem>& items) {
  json out;
  out["format"] = "proxymotion-dataset";
  out["version"] = kFormatVersion;
  json list = json::array();
  for (const DatasetItem& item : items) {
    list.push_back({{"label", item.label ? json(*item.label) : json(nullptr)},
                    {"level", item.level},
                    {"boxes", json::parse(serialize_boxes(item.boxes))},
                    {"motion", json::parse(serialize_motion(item.motion))}});
  }
  out["items"] = std::move(list);
  return out.dump() + "\n";
}

std::vector<DatasetItem> parse_dataset(std::string_view content) {
  const json doc = parse_json(content);
  std::vector<DatasetItem> items;
  try {
    if (doc.at("format") != "proxymotion-dataset") throw Error(ErrorKind::kSchema, "not a dataset file");
    if (doc.at("version") != kFormatVersion) throw Error(ErrorKind::kSchema, "unsupported dataset version");
    for (const json& j : doc.at("items")) {
      std::optional<std::string> label;
      if (!j.at("label").is_null()) label = j.at("label").get<std::string>();
      items.push_back({parse_boxes(j.at("boxes").dump()), parse_motion(j.at("motion").dump()), label,
                       j.at("level").get<int>()});
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kSchema, std::string("malformed dataset: ") + e.what());
  }
  return items;
}

}  // namespace proxymotion::cli
