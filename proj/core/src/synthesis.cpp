#include "proxymotion/synthesis.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <random>

#include "proxymotion/errors.hpp"
#include "proxymotion/geometry.hpp"
#include "proxymotion/skeleton.hpp"

namespace proxymotion {

namespace {

constexpr double kPi = 3.14159265358979323846;

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

class Sampler {
 public:
  explicit Sampler(std::uint64_t seed) : engine_(seed) {}

  double uniform(double lo = 0.0, double hi = 1.0) {
    return std::uniform_real_distribution<double>(lo, hi)(engine_);
  }
  int index(int n) { return std::uniform_int_distribution<int>(0, n - 1)(engine_); }
  bool chance(double p) { return uniform() < p; }
  Vec3 direction() {
    std::normal_distribution<double> normal;
    Vec3 v;
    do {
      v = Vec3(normal(engine_), normal(engine_), normal(engine_));
    } while (v.norm() < 1e-9);
    return v.normalized();
  }

 private:
  std::mt19937_64 engine_;
};

Quat about(const Vec3& axis, double angle) { return Quat(Eigen::AngleAxisd(angle, axis)); }

// Forward flexion of a limb hanging along -Y toward +Z.
Quat flex(double angle) { return about(Vec3::UnitX(), -angle); }

double smoothstep(double x) {
  x = std::clamp(x, 0.0, 1.0);
  return x * x * (3.0 - 2.0 * x);
}

struct Rhythm {
  double freq;
  double phase;
  double gain;
};

Rhythm rhythm(Sampler& s, double lo, double hi) { return {s.uniform(lo, hi), s.uniform(0.0, 2.0 * kPi), s.uniform(0.5, 1.0)}; }

double wave_at(const Rhythm& r, double t) { return r.gain * std::sin(2.0 * kPi * r.freq * t + r.phase); }

// Legs bend so the feet stay level while the pelvis drops by the returned amount.
double bend_legs(humanoid::Pose& pose, double angle) {
  using namespace humanoid;
  pose.local[kLeftHip] = flex(angle);
  pose.local[kRightHip] = flex(angle);
  pose.local[kLeftKnee] = flex(-2.0 * angle);
  pose.local[kRightKnee] = flex(-2.0 * angle);
  pose.local[kLeftAnkle] = flex(angle);
  pose.local[kRightAnkle] = flex(angle);
  const auto& rest = rest_pose();
  const double thigh = (rest.row(kLeftHip) - rest.row(kLeftKnee)).norm();
  const double shin = (rest.row(kLeftKnee) - rest.row(kLeftAnkle)).norm();
  return (thigh + shin) * (1.0 - std::cos(angle));
}

using PoseFn = std::function<humanoid::Pose(double /*seconds*/, double /*normalized*/)>;

PoseFn idle_motion(Sampler& s, double amp) {
  const Rhythm breath = rhythm(s, 0.2, 0.4);
  const Rhythm sway = rhythm(s, 0.1, 0.3);
  const Rhythm arms = rhythm(s, 0.15, 0.35);
  const double heading = amp * s.uniform(-0.5, 0.5);
  return [=](double t, double) {
    using namespace humanoid;
    Pose pose;
    pose.root_rotation = about(Vec3::UnitY(), heading);
    pose.root_offset = Vec3(0.01 * amp * wave_at(sway, t), 0.0, 0.0);
    pose.local[kSpine1] = about(Vec3::UnitX(), 0.03 * amp * wave_at(breath, t));
    pose.local[kLeftShoulder] = flex(0.05 * amp * wave_at(arms, t));
    pose.local[kRightShoulder] = flex(-0.05 * amp * wave_at(arms, t));
    pose.local[kNeck] = about(Vec3::UnitY(), 0.1 * amp * wave_at(sway, t));
    return pose;
  };
}

PoseFn walk_motion(Sampler& s, double amp) {
  const double speed = amp * s.uniform(0.9, 1.3);
  const double freq = s.uniform(0.8, 1.1);
  const double phase = s.uniform(0.0, 2.0 * kPi);
  const double stride = s.uniform(0.35, 0.5);
  const double heading = 0.5 * kPi + s.uniform(-0.3, 0.3);
  return [=](double t, double) {
    using namespace humanoid;
    const double c = 2.0 * kPi * freq * t + phase;
    const double swing = amp * stride * std::sin(c);
    Pose pose;
    pose.root_rotation = about(Vec3::UnitY(), heading);
    pose.root_offset = speed * t * Vec3(std::sin(heading), 0.0, std::cos(heading)) +
                       Vec3(0.0, 0.02 * amp * std::abs(std::sin(c)), 0.0);
    pose.local[kLeftHip] = flex(swing);
    pose.local[kRightHip] = flex(-swing);
    pose.local[kLeftKnee] = flex(-0.7 * amp * std::max(0.0, std::sin(c + 0.5 * kPi)));
    pose.local[kRightKnee] = flex(-0.7 * amp * std::max(0.0, -std::sin(c + 0.5 * kPi)));
    pose.local[kLeftShoulder] = flex(-0.8 * swing);
    pose.local[kRightShoulder] = flex(0.8 * swing);
    pose.local[kLeftElbow] = flex(0.25 * amp);
    pose.local[kRightElbow] = flex(0.25 * amp);
    return pose;
  };
}

PoseFn jump_motion(Sampler& s, double amp) {
  const double takeoff = s.uniform(0.2, 0.3);
  const double airtime = s.uniform(0.3, 0.4);
  const double peak = amp * s.uniform(0.25, 0.4);
  const double dip = amp * s.uniform(0.4, 0.6);
  const double reach = amp * s.uniform(1.8, 2.4);
  const double heading = amp * s.uniform(-0.5, 0.5);
  const double landing = takeoff + airtime;
  return [=](double, double u) {
    using namespace humanoid;
    Pose pose;
    pose.root_rotation = about(Vec3::UnitY(), heading);
    double bend = 0.0;
    double lift = 0.0;
    double arms = 0.0;
    if (u < takeoff) {
      bend = dip * std::sin(kPi * u / takeoff);
    } else if (u < landing) {
      const double v = (u - takeoff) / airtime;
      lift = 4.0 * peak * v * (1.0 - v);
      arms = reach * std::sin(kPi * v);
    } else if (u < landing + 0.2) {
      bend = dip * std::sin(kPi * (u - landing) / 0.2);
    }
    const double drop = bend_legs(pose, bend);
    pose.root_offset = Vec3(0.0, lift - drop, 0.0);
    pose.local[kLeftShoulder] = about(Vec3::UnitZ(), arms);
    pose.local[kRightShoulder] = about(Vec3::UnitZ(), -arms);
    return pose;
  };
}

PoseFn wave_motion(Sampler& s, double amp) {
  const bool left = s.chance(0.5);
  const double freq = s.uniform(1.2, 2.0);
  const double phase = s.uniform(0.0, 2.0 * kPi);
  const double raise = amp * s.uniform(2.2, 2.6);
  const double swing = amp * s.uniform(0.35, 0.6);
  PoseFn rest = idle_motion(s, 0.5 * amp);
  return [=](double t, double u) {
    using namespace humanoid;
    Pose pose = rest(t, u);
    const double side = left ? 1.0 : -1.0;
    const double ramp = smoothstep(u / 0.15);
    pose.local[left ? kLeftShoulder : kRightShoulder] = about(Vec3::UnitZ(), side * raise * ramp);
    pose.local[left ? kLeftElbow : kRightElbow] =
        about(Vec3::UnitZ(), side * ramp * swing * std::sin(2.0 * kPi * freq * t + phase));
    return pose;
  };
}

PoseFn crouch_motion(Sampler& s, double amp) {
  const double depth = amp * s.uniform(0.7, 1.1);
  const double start = s.uniform(0.05, 0.2);
  const double end = s.uniform(0.8, 0.95);
  const double heading = amp * s.uniform(-0.5, 0.5);
  return [=](double, double u) {
    using namespace humanoid;
    Pose pose;
    pose.root_rotation = about(Vec3::UnitY(), heading);
    const double v = std::clamp((u - start) / (end - start), 0.0, 1.0);
    const double angle = depth * std::pow(std::sin(kPi * v), 2.0);
    const double drop = bend_legs(pose, angle);
    pose.root_offset = Vec3(0.0, -drop, 0.0);
    pose.local[kSpine1] = about(Vec3::UnitX(), 0.5 * angle);
    pose.local[kLeftShoulder] = flex(0.8 * angle);
    pose.local[kRightShoulder] = flex(0.8 * angle);
    return pose;
  };
}

PoseFn spin_motion(Sampler& s, double amp) {
  const double turns = amp * s.uniform(0.5, 1.0) * (s.chance(0.5) ? 1.0 : -1.0);
  const double heading = amp * s.uniform(-0.5, 0.5);
  const double spread = amp * s.uniform(0.3, 0.6);
  return [=](double, double u) {
    using namespace humanoid;
    Pose pose;
    pose.root_rotation = about(Vec3::UnitY(), heading + 2.0 * kPi * turns * smoothstep(u));
    pose.local[kLeftShoulder] = about(Vec3::UnitZ(), spread);
    pose.local[kRightShoulder] = about(Vec3::UnitZ(), -spread);
    return pose;
  };
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> keys) {
  std::uint64_t h = splitmix(base);
  for (std::uint64_t k : keys) h = splitmix(h ^ splitmix(k + 0x51ED2701ULL));
  return h;
}

void AugmentConfig::validate() const {
  auto prob = [](double p) { return p >= 0.0 && p <= 1.0; };
  if (!prob(p_drop_label) || !prob(p_drop_box) || !prob(p_jitter) || !(jitter_angle_max >= 0.0) ||
      !(jitter_trans_max >= 0.0)) {
    throw Error(ErrorKind::kInvariant, "invalid augmentation config");
  }
}

AugmentConfig AugmentConfig::none() {
  AugmentConfig cfg;
  cfg.p_drop_label = 0.0;
  cfg.p_drop_box = 0.0;
  cfg.p_jitter = 0.0;
  return cfg;
}

void ProceduralConfig::validate() const {
  if (frames < 2 || num_sequences < 1 || !(fps > 0.0) || !(amplitude >= 0.0)) {
    throw Error(ErrorKind::kInvariant, "invalid procedural config");
  }
}

const Partition& part_grouping(const SkeletonDef& skeleton, int level) {
  const auto it = skeleton.groupings().find(level);
  if (it == skeleton.groupings().end()) {
    throw Error(ErrorKind::kUnknownLevel, "no grouping with " + std::to_string(level) + " parts");
  }
  return it->second;
}

BoxMotionSequence skeleton_to_boxes(const SkeletonMotion& motion, const Partition& grouping, double padding) {
  const int num_joints = motion.num_joints();
  std::vector<int> seen(static_cast<std::size_t>(num_joints), 0);
  for (const auto& part : grouping) {
    for (int j : part) {
      if (j < 0 || j >= num_joints) throw Error(ErrorKind::kInvariant, "grouping joint out of range");
      ++seen[static_cast<std::size_t>(j)];
    }
  }
  if (grouping.empty() || std::any_of(seen.begin(), seen.end(), [](int c) { return c != 1; })) {
    throw Error(ErrorKind::kInvariant, "grouping does not partition the motion's joints");
  }
  std::vector<BoxMotionSequence::Frame> frames;
  frames.reserve(static_cast<std::size_t>(motion.num_frames()));
  std::vector<Vec3> points;
  for (int f = 0; f < motion.num_frames(); ++f) {
    BoxMotionSequence::Frame frame;
    for (const auto& part : grouping) {
      points.clear();
      for (int j : part) points.push_back(motion.joint(f, j));
      frame.emplace_back(fit_obb_relaxed(points, padding));
    }
    frames.push_back(std::move(frame));
  }
  return BoxMotionSequence(motion.fps(), static_cast<int>(grouping.size()), std::move(frames));
}

LabeledBoxes augment_sequence(const LabeledBoxes& pair, const AugmentConfig& cfg) {
  cfg.validate();
  Sampler s(cfg.seed);
  std::optional<std::string> label = pair.label;
  if (s.chance(cfg.p_drop_label)) label.reset();

  const int num_boxes = pair.boxes.num_boxes();
  std::vector<int> kept;
  for (int b = 0; b < num_boxes; ++b) {
    if (!s.chance(cfg.p_drop_box)) kept.push_back(b);
  }
  if (kept.empty()) kept.push_back(s.index(num_boxes));

  std::vector<BoxMotionSequence::Frame> frames;
  frames.reserve(pair.boxes.frames().size());
  for (const auto& frame : pair.boxes.frames()) {
    BoxMotionSequence::Frame out;
    for (int b : kept) out.push_back(frame[static_cast<std::size_t>(b)]);
    frames.push_back(std::move(out));
  }

  if (s.chance(cfg.p_jitter)) {
    const int f = s.index(static_cast<int>(frames.size()));
    auto& frame = frames[static_cast<std::size_t>(f)];
    std::vector<int> present;
    for (int b = 0; b < static_cast<int>(frame.size()); ++b) {
      if (frame[static_cast<std::size_t>(b)]) present.push_back(b);
    }
    int count = (present.size() >= 2 && s.chance(0.5)) ? 2 : 1;
    count = std::min<int>(count, static_cast<int>(present.size()));
    for (int i = 0; i < count; ++i) {
      const int pick = s.index(static_cast<int>(present.size()));
      const int b = present[static_cast<std::size_t>(pick)];
      present.erase(present.begin() + pick);
      const Vec3 axis = s.direction();
      const double angle = s.uniform(0.0, cfg.jitter_angle_max);
      const Vec3 shift = s.direction() * s.uniform(0.0, cfg.jitter_trans_max);
      auto& slot = frame[static_cast<std::size_t>(b)];
      Quat q = about(axis, angle) * slot->rotation();
      q.normalize();
      slot = BoxPose(slot->center() + shift, q, slot->half_extents());
    }
  }
  return {BoxMotionSequence(pair.boxes.fps(), static_cast<int>(kept.size()), std::move(frames)), label};
}

SkeletonMotion gen_procedural_motion(const std::string& label, const ProceduralConfig& cfg, int index) {
  cfg.validate();
  const int label_index = cfg.vocabulary.index_of(label);
  Sampler s(derive_seed(cfg.seed, {static_cast<std::uint64_t>(label_index), static_cast<std::uint64_t>(index)}));
  const double amp = cfg.amplitude;

  PoseFn motion;
  if (label == "idle") {
    motion = idle_motion(s, amp);
  } else if (label == "walk") {
    motion = walk_motion(s, amp);
  } else if (label == "jump") {
    motion = jump_motion(s, amp);
  } else if (label == "wave") {
    motion = wave_motion(s, amp);
  } else if (label == "crouch") {
    motion = crouch_motion(s, amp);
  } else if (label == "spin") {
    motion = spin_motion(s, amp);
  } else {
    throw Error(ErrorKind::kUnknownLabel, "no procedural generator for '" + label + "'");
  }

  Eigen::MatrixXd joints(cfg.frames, 3 * humanoid::kNumJoints);
  for (int f = 0; f < cfg.frames; ++f) {
    const double seconds = f / cfg.fps;
    const double normalized = static_cast<double>(f) / static_cast<double>(cfg.frames - 1);
    joints.row(f) = humanoid::forward_kinematics(humanoid::rest_pose(), motion(seconds, normalized));
  }
  double min_y = 0.0;
  for (int j = 0; j < humanoid::kNumJoints; ++j) min_y = std::min(min_y, joints.col(3 * j + 1).minCoeff());
  if (min_y < 0.0) {
    for (int j = 0; j < humanoid::kNumJoints; ++j) joints.col(3 * j + 1).array() -= min_y;
  }
  return SkeletonMotion(cfg.fps, SkeletonDef::humanoid22().name(), std::move(joints), label);
}

std::vector<DatasetItem> build_dataset(const ProceduralConfig& cfg, const std::set<int>& levels,
                                       const AugmentConfig& aug) {
  cfg.validate();
  aug.validate();
  if (levels.empty()) throw Error(ErrorKind::kInvariant, "build_dataset needs at least one level");
  const SkeletonDef& skeleton = SkeletonDef::humanoid22();
  for (int level : levels) part_grouping(skeleton, level);

  std::vector<DatasetItem> items;
  items.reserve(cfg.vocabulary.labels().size() * static_cast<std::size_t>(cfg.num_sequences) * levels.size());
  for (const std::string& label : cfg.vocabulary.labels()) {
    const auto label_index = static_cast<std::uint64_t>(cfg.vocabulary.index_of(label));
    for (int index = 0; index < cfg.num_sequences; ++index) {
      const SkeletonMotion motion = gen_procedural_motion(label, cfg, index);
      for (int level : levels) {
        AugmentConfig item_aug = aug;
        item_aug.seed = derive_seed(aug.seed, {label_index, static_cast<std::uint64_t>(index),
                                               static_cast<std::uint64_t>(level)});
        LabeledBoxes augmented = augment_sequence(
            {skeleton_to_boxes(motion, part_grouping(skeleton, level)), motion.label()}, item_aug);
        items.push_back({std::move(augmented.boxes), motion, std::move(augmented.label), level});
      }
    }
  }
  return items;
}

}  // namespace proxymotion
