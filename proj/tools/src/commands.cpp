#include "commands.hpp"

#include <spdlog/spdlog.h>

#include <chrono>
#include <set>

#include "dataset_file.hpp"
#include "proxymotion/checkpoint.hpp"
#include "proxymotion/config_json.hpp"
#include "proxymotion/errors.hpp"
#include "proxymotion/geometry.hpp"
#include "proxymotion/guidance.hpp"
#include "proxymotion/io.hpp"
#include "proxymotion/sampling.hpp"
#include "proxymotion/schedule.hpp"
#include "proxymotion/synthesis.hpp"
#include "proxymotion/training.hpp"
#include "run_manifest.hpp"

namespace proxymotion::cli {

using nlohmann::json;

namespace {

json load_config(const std::optional<path>& p, std::initializer_list<const char*> sections) {
  if (!p) return json::object();
  json j = parse_json(read_file(*p));
  if (!j.is_object()) throw Error(ErrorKind::kSchema, "config must be a JSON object");
  const std::set<std::string> allowed(sections.begin(), sections.end());
  for (const auto& [key, _] : j.items()) {
    if (!allowed.count(key)) throw Error(ErrorKind::kSchema, "unknown config key '" + key + "'");
  }
  return j;
}

template <typename T>
T section(const json& cfg, const char* key) {
  T out;
  if (cfg.contains(key)) from_json(cfg.at(key), out);
  return out;
}

void ensure_dir(const path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::kIo, "cannot create " + dir.string() + ": " + ec.message());
}

void write_manifest(const RunManifest& m, const path& dir) {
  write_file(dir / "run.json", m.to_json().dump(2) + "\n");
}

}  // namespace

json fit_boxes(const FitBoxesArgs& a) {
  const json cfg = load_config(a.config, {"filter", "normalize"});
  const auto filter = section<FilterConfig>(cfg, "filter");
  const auto norm = section<NormalizeConfig>(cfg, "normalize");
  filter.validate();
  norm.validate();

  RunManifest m("fit-boxes");
  m.add_input(a.capture);
  m.set_config({{"filter", to_json(filter)}, {"normalize", to_json(norm)}});

  const CaptureSession session = parse_capture(read_file(a.capture));
  spdlog::info("capture: {} frames at {} fps", session.num_frames(), session.fps());
  const BoxMotionSequence boxes = propagate_boxes(session, filter, norm);
  spdlog::info("fitted {} boxes over {} frames", boxes.num_boxes(), boxes.num_frames());
  write_file(a.output, serialize_boxes(boxes));
  m.add_output(a.output);
  return m.to_json();
}

json keyframes(const KeyframesArgs& a) {
  RunManifest m("keyframes");
  m.add_input(a.keys);
  m.set_config({{"between", a.between}});
  const BoxMotionSequence keys = parse_boxes(read_file(a.keys));
  const BoxMotionSequence out = expand_keyframes(keys, a.between);
  spdlog::info("{} keys -> {} frames", keys.num_frames(), out.num_frames());
  write_file(a.output, serialize_boxes(out));
  m.add_output(a.output);
  return m.to_json();
}

json synth_dataset(const SynthArgs& a) {
  const json cfg = load_config(a.config, {"procedural", "augment", "levels"});
  auto pc = section<ProceduralConfig>(cfg, "procedural");
  auto ac = section<AugmentConfig>(cfg, "augment");
  std::set<int> levels{1, 2, 4, 6};
  if (cfg.contains("levels")) {
    try {
      levels = cfg.at("levels").get<std::set<int>>();
    } catch (const json::exception& e) {
      throw Error(ErrorKind::kSchema, std::string("levels: ") + e.what());
    }
  }
  if (a.seed) {
    // One seed drives both generators; augmentation gets a derived stream.
    pc.seed = *a.seed;
    ac.seed = derive_seed(*a.seed, {1});
  }
  pc.validate();
  ac.validate();

  RunManifest m("synth-dataset");
  if (a.config) m.add_input(*a.config);
  m.set_config({{"procedural", to_json(pc)}, {"augment", to_json(ac)}, {"levels", levels}});
  m.set_seed(pc.seed);

  const auto items = build_dataset(pc, levels, ac);
  spdlog::info("{} items over {} levels", items.size(), levels.size());
  ensure_dir(a.out_dir);
  write_file(a.out_dir / "dataset.json", serialize_dataset(items));
  m.add_output(a.out_dir / "dataset.json");
  write_manifest(m, a.out_dir);
  return m.to_json();
}

json train(const TrainArgs& a) {
  const json cfg = load_config(a.config, {"model", "train", "seed"});
  auto mc = section<ModelConfig>(cfg, "model");
  auto tc = section<TrainConfig>(cfg, "train");
  std::uint64_t seed = 0;
  if (cfg.contains("seed")) {
    if (!cfg.at("seed").is_number_unsigned()) throw Error(ErrorKind::kSchema, "seed must be a non-negative integer");
    seed = cfg.at("seed").get<std::uint64_t>();
  }
  if (a.seed) seed = *a.seed;
  if (a.steps_base) tc.steps_base = *a.steps_base;
  if (a.steps_control) tc.steps_control = *a.steps_control;

  const auto data = parse_dataset(read_file(a.dataset));
  if (data.empty()) throw Error(ErrorKind::kEmptyDataset, "dataset has no items");
  // Motion shape comes from the data, not the config.
  mc.diffusion.frames = data.front().motion.num_frames();
  mc.diffusion.joints = data.front().motion.num_joints();
  mc.fps = data.front().motion.fps();
  mc.skeleton = data.front().motion.skeleton();
  mc.validate();
  tc.validate();

  RunManifest m("train");
  m.add_input(a.dataset);
  m.set_config({{"model", to_json(mc)}, {"train", to_json(tc)}});
  m.set_seed(seed);

  MotionModel model(mc);
  model.init(seed);
  const auto t0 = std::chrono::steady_clock::now();
  const TrainResult tr = train_model(model, data, tc, [&](const LossPoint& p) {
    spdlog::info("phase {} step {} loss {:.5f} ({:.0f} s)", p.phase == 0 ? "base" : "control", p.step, p.loss,
                 std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  });

  json curve = json::array();
  for (const LossPoint& p : tr.curve) curve.push_back({{"phase", p.phase}, {"step", p.step}, {"loss", p.loss}});
  const json summary{{"initial_loss_base", tr.initial_loss_base},
                     {"final_loss_base", tr.final_loss_base},
                     {"initial_loss_control", tr.initial_loss_control},
                     {"final_loss_control", tr.final_loss_control},
                     {"curve", curve}};
  ensure_dir(a.out_dir);
  save_checkpoint(model, a.out_dir, summary);
  m.add_output(a.out_dir);
  write_manifest(m, a.out_dir);
  return m.to_json();
}

json generate(const GenerateArgs& a) {
  const json cfg = load_config(a.config, {"guidance"});
  auto gc = section<GuidanceConfig>(cfg, "guidance");
  if (a.inner_steps) gc.inner_steps = *a.inner_steps;
  if (a.step_scale) gc.step_scale = *a.step_scale;
  gc.validate();

  RunManifest m("generate");
  m.add_input(a.checkpoint);
  if (a.boxes) m.add_input(*a.boxes);
  m.set_config({{"guidance", to_json(gc)}, {"label", a.label ? json(*a.label) : json(nullptr)}});
  m.set_seed(a.seed);

  const MotionModel model = load_checkpoint(a.checkpoint);
  const NoiseSchedule schedule = make_schedule(model.config().diffusion);
  std::optional<BoxMotionSequence> boxes;
  if (a.boxes) boxes = parse_boxes(read_file(*a.boxes));

  SampleTrace trace;
  const SkeletonMotion motion =
      sample_motion(model, schedule, a.label, boxes ? &*boxes : nullptr, gc, a.seed, &trace);
  if (boxes) spdlog::info("guided steps {}, final guidance loss {:.5f}", trace.guided_steps, trace.final_guidance_loss);
  if (trace.ground_shift != 0.0) spdlog::info("lifted by {:.4f} to the ground", trace.ground_shift);
  write_file(a.output, serialize_motion(motion));
  m.add_output(a.output);
  return m.to_json();
}

json evaluate(const EvalArgs& a) {
  const json cfg = load_config(a.config, {"guidance"});
  const auto gc = section<GuidanceConfig>(cfg, "guidance");
  gc.validate();
  const SkeletonMotion motion = parse_motion(read_file(a.motion));
  const BoxMotionSequence boxes = parse_boxes(read_file(a.boxes));
  return {{"containment_rate", containment_rate(motion.joints(), boxes, gc)},
          {"mean_center_dist", mean_center_dist(motion.joints(), boxes)},
          {"guidance_loss", guidance_loss(motion.joints(), boxes, gc)}};
}

}  // namespace proxymotion::cli
