#include "proxymotion/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <map>

#include "proxymotion/config_json.hpp"
#include "proxymotion/errors.hpp"
#include "proxymotion/io.hpp"

namespace proxymotion {

using nlohmann::json;

namespace {

void put_f32(std::string& out, float v) {
  const auto bits = std::bit_cast<std::uint32_t>(v);
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xffu));
}

float get_f32(const std::string& in, std::size_t index) {
  std::uint32_t bits = 0;
  for (int i = 0; i < 4; ++i) {
    bits |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[4 * index + static_cast<std::size_t>(i)])) << (8 * i);
  }
  return std::bit_cast<float>(bits);
}

std::vector<double> to_vector(const Eigen::RowVectorXd& v) { return {v.data(), v.data() + v.size()}; }

Eigen::RowVectorXd from_vector(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::RowVectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

void round_to_float(nn::ParamStore& store) {
  for (double& v : store.values()) v = static_cast<double>(static_cast<float>(v));
}

void save_params(const nn::ParamStore& store, const std::filesystem::path& dir, const json& extra) {
  std::filesystem::create_directories(dir);
  json manifest = extra.is_object() ? extra : json::object();
  manifest["format"] = "proxymotion-params";
  manifest["version"] = kFormatVersion;
  manifest["dtype"] = "float32";
  manifest["byte_order"] = "little";
  manifest["payload"] = kPayloadFile;
  json blocks = json::array();
  std::size_t offset = 0;
  std::string payload;
  payload.reserve(4 * store.size());
  for (const auto& b : store.blocks()) {
    blocks.push_back({{"name", b.name}, {"rows", b.rows}, {"cols", b.cols}, {"offset", offset}});
    for (std::size_t i = 0; i < b.size(); ++i) put_f32(payload, static_cast<float>(store.values()[b.offset + i]));
    offset += b.size();
  }
  manifest["blocks"] = std::move(blocks);
  manifest["count"] = offset;
  write_file(dir / kPayloadFile, payload);
  write_file(dir / kManifestFile, manifest.dump(2) + "\n");
}

json load_params(nn::ParamStore& store, const std::filesystem::path& dir) {
  const json manifest = parse_json(read_file(dir / kManifestFile));
  try {
    if (manifest.at("format") != "proxymotion-params") throw Error(ErrorKind::kSchema, "not a parameter manifest");
    if (manifest.at("version") != kFormatVersion) throw Error(ErrorKind::kSchema, "unsupported checkpoint version");
    if (manifest.at("dtype") != "float32" || manifest.at("byte_order") != "little") {
      throw Error(ErrorKind::kSchema, "unsupported payload encoding");
    }
    const std::string payload = read_file(dir / manifest.at("payload").get<std::string>());
    const std::size_t count = manifest.at("count").get<std::size_t>();
    if (payload.size() != 4 * count) throw Error(ErrorKind::kSchema, "payload size differs from manifest count");
    std::map<std::string, json> by_name;
    for (const json& b : manifest.at("blocks")) by_name[b.at("name").get<std::string>()] = b;
    for (int id = 0; id < static_cast<int>(store.blocks().size()); ++id) {
      const auto& blk = store.block(id);
      auto it = by_name.find(blk.name);
      if (it == by_name.end()) throw Error(ErrorKind::kShapeMismatch, "checkpoint lacks block " + blk.name);
      const json& b = it->second;
      if (b.at("rows").get<int>() != blk.rows || b.at("cols").get<int>() != blk.cols) {
        throw Error(ErrorKind::kShapeMismatch, "checkpoint block " + blk.name + " has a different shape");
      }
      const std::size_t off = b.at("offset").get<std::size_t>();
      if (off + blk.size() > count) throw Error(ErrorKind::kSchema, "block " + blk.name + " runs past the payload");
      for (std::size_t i = 0; i < blk.size(); ++i) store.values()[blk.offset + i] = get_f32(payload, off + i);
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kSchema, std::string("malformed checkpoint manifest: ") + e.what());
  }
  return manifest;
}

void save_checkpoint(const MotionModel& model, const std::filesystem::path& dir, const json& training) {
  json extra;
  extra["model"] = to_json(model.config());
  extra["normalization"] = {{"mean", to_vector(model.mean())}, {"std", to_vector(model.stddev())}};
  extra["training"] = training.is_null() ? json::object() : training;
  save_params(model.params(), dir, extra);
}

MotionModel load_checkpoint(const std::filesystem::path& dir) {
  const json manifest = parse_json(read_file(dir / kManifestFile));
  ModelConfig cfg;
  std::vector<double> mean;
  std::vector<double> stddev;
  try {
    from_json(manifest.at("model"), cfg);
    mean = manifest.at("normalization").at("mean").get<std::vector<double>>();
    stddev = manifest.at("normalization").at("std").get<std::vector<double>>();
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kSchema, std::string("malformed checkpoint manifest: ") + e.what());
  }
  MotionModel model(cfg);
  load_params(model.params(), dir);
  model.set_normalization(from_vector(mean), from_vector(stddev));
  return model;
}

}  // namespace proxymotion
