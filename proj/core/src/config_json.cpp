#include "proxymotion/config_json.hpp"

#include <set>
#include <string>

#include "proxymotion/errors.hpp"

namespace proxymotion {

using nlohmann::json;

namespace {

class Reader {
 public:
  Reader(const json& j, std::string what) : j_(j), what_(std::move(what)) {
    if (!j.is_object()) throw Error(ErrorKind::kSchema, what_ + " must be a JSON object");
  }

  template <typename T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end()) return;
    try {
      out = it->template get<T>();
    } catch (const json::exception& e) {
      throw Error(ErrorKind::kSchema, what_ + "." + key + ": " + e.what());
    }
  }

  // Seeds are unsigned 64-bit; accept any non-negative integer.
  void seed(const char* key, std::uint64_t& out) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end()) return;
    if (!it->is_number_integer() || (it->is_number_integer() && !it->is_number_unsigned() && it->get<long long>() < 0)) {
      throw Error(ErrorKind::kSchema, what_ + "." + key + " must be a non-negative integer");
    }
    out = it->get<std::uint64_t>();
  }

  const json* sub(const char* key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) throw Error(ErrorKind::kSchema, "unknown key " + what_ + "." + it.key());
    }
  }

 private:
  const json& j_;
  std::string what_;
  std::set<std::string> seen_;
};

}  // namespace

json parse_json(std::string_view text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::kSchema, std::string("invalid JSON: ") + e.what());
  }
}

json to_json(const FilterConfig& c) {
  return {{"confidence_min", c.confidence_min}, {"knn_k", c.knn_k}, {"knn_sigma", c.knn_sigma}};
}

json to_json(const NormalizeConfig& c) { return {{"target_height", c.target_height}, {"smoothing", c.smoothing}}; }

json to_json(const AugmentConfig& c) {
  return {{"p_drop_label", c.p_drop_label},         {"p_drop_box", c.p_drop_box},
          {"p_jitter", c.p_jitter},                 {"jitter_angle_max", c.jitter_angle_max},
          {"jitter_trans_max", c.jitter_trans_max}, {"seed", c.seed}};
}

json to_json(const ProceduralConfig& c) {
  return {{"num_sequences", c.num_sequences}, {"frames", c.frames},
          {"fps", c.fps},                     {"amplitude", c.amplitude},
          {"seed", c.seed},                   {"labels", c.vocabulary.labels()}};
}

json to_json(const DiffusionConfig& c) {
  return {{"steps", c.steps},   {"beta_start", c.beta_start}, {"beta_end", c.beta_end},   {"d_model", c.d_model},
          {"layers", c.layers}, {"heads", c.heads},           {"frames", c.frames},       {"joints", c.joints},
          {"cfg_scale", c.cfg_scale}, {"label_drop", c.label_drop}};
}

json to_json(const EncoderConfig& c) { return {{"hidden", c.hidden}, {"heads", c.heads}}; }

json to_json(const ModelConfig& c) {
  return {{"diffusion", to_json(c.diffusion)},
          {"encoder", to_json(c.encoder)},
          {"labels", c.labels},
          {"fps", c.fps},
          {"skeleton", c.skeleton}};
}

json to_json(const GuidanceConfig& c) {
  return {{"tau", c.tau},
          {"containment_margin", c.containment_margin},
          {"step_scale", c.step_scale},
          {"inner_steps", c.inner_steps},
          {"active_fraction", c.active_fraction}};
}

json to_json(const TrainConfig& c) {
  return {{"steps_base", c.steps_base}, {"steps_control", c.steps_control}, {"batch", c.batch},
          {"lr", c.lr},                 {"grad_clip", c.grad_clip},         {"log_every", c.log_every},
          {"seed", c.seed}};
}

void from_json(const json& j, FilterConfig& c) {
  Reader r(j, "filter");
  r.get("confidence_min", c.confidence_min);
  r.get("knn_k", c.knn_k);
  r.get("knn_sigma", c.knn_sigma);
  r.finish();
  c.validate();
}

void from_json(const json& j, NormalizeConfig& c) {
  Reader r(j, "normalize");
  r.get("target_height", c.target_height);
  r.get("smoothing", c.smoothing);
  r.finish();
  c.validate();
}

void from_json(const json& j, AugmentConfig& c) {
  Reader r(j, "augment");
  r.get("p_drop_label", c.p_drop_label);
  r.get("p_drop_box", c.p_drop_box);
  r.get("p_jitter", c.p_jitter);
  r.get("jitter_angle_max", c.jitter_angle_max);
  r.get("jitter_trans_max", c.jitter_trans_max);
  r.seed("seed", c.seed);
  r.finish();
  c.validate();
}

void from_json(const json& j, ProceduralConfig& c) {
  Reader r(j, "procedural");
  r.get("num_sequences", c.num_sequences);
  r.get("frames", c.frames);
  r.get("fps", c.fps);
  r.get("amplitude", c.amplitude);
  r.seed("seed", c.seed);
  std::vector<std::string> labels = c.vocabulary.labels();
  r.get("labels", labels);
  r.finish();
  c.vocabulary = LabelVocabulary(labels);
  c.validate();
}

void from_json(const json& j, DiffusionConfig& c) {
  Reader r(j, "diffusion");
  r.get("steps", c.steps);
  r.get("beta_start", c.beta_start);
  r.get("beta_end", c.beta_end);
  r.get("d_model", c.d_model);
  r.get("layers", c.layers);
  r.get("heads", c.heads);
  r.get("frames", c.frames);
  r.get("joints", c.joints);
  r.get("cfg_scale", c.cfg_scale);
  r.get("label_drop", c.label_drop);
  r.finish();
  c.validate();
}

void from_json(const json& j, EncoderConfig& c) {
  Reader r(j, "encoder");
  r.get("hidden", c.hidden);
  r.get("heads", c.heads);
  r.finish();
}

void from_json(const json& j, ModelConfig& c) {
  Reader r(j, "model");
  if (const json* d = r.sub("diffusion")) from_json(*d, c.diffusion);
  if (const json* e = r.sub("encoder")) from_json(*e, c.encoder);
  r.get("labels", c.labels);
  r.get("fps", c.fps);
  r.get("skeleton", c.skeleton);
  r.finish();
  c.validate();
}

void from_json(const json& j, GuidanceConfig& c) {
  Reader r(j, "guidance");
  r.get("tau", c.tau);
  r.get("containment_margin", c.containment_margin);
  r.get("step_scale", c.step_scale);
  r.get("inner_steps", c.inner_steps);
  r.get("active_fraction", c.active_fraction);
  r.finish();
  c.validate();
}

void from_json(const json& j, TrainConfig& c) {
  Reader r(j, "train");
  r.get("steps_base", c.steps_base);
  r.get("steps_control", c.steps_control);
  r.get("batch", c.batch);
  r.get("lr", c.lr);
  r.get("grad_clip", c.grad_clip);
  r.get("log_every", c.log_every);
  r.seed("seed", c.seed);
  r.finish();
  c.validate();
}

}  // namespace proxymotion
