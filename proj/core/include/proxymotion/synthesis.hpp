#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "proxymotion/types.hpp"

namespace proxymotion {

inline constexpr double kJointBoxPadding = 0.05;

struct AugmentConfig {
  double p_drop_label = 0.1;
  double p_drop_box = 0.1;
  double p_jitter = 0.3;
  double jitter_angle_max = 0.35;
  double jitter_trans_max = 0.1;
  std::uint64_t seed = 0;

  void validate() const;
  /// Same settings with every probability set to zero.
  static AugmentConfig none();
};

struct ProceduralConfig {
  int num_sequences = 50;
  int frames = 60;
  double fps = 20.0;
  double amplitude = 1.0;  ///< Scales every label-specific motion amplitude.
  std::uint64_t seed = 0;
  LabelVocabulary vocabulary;

  void validate() const;
};

struct LabeledBoxes {
  BoxMotionSequence boxes;
  std::optional<std::string> label;
};

struct DatasetItem {
  BoxMotionSequence boxes;
  SkeletonMotion motion;
  std::optional<std::string> label;
  int level = 0;
};

const Partition& part_grouping(const SkeletonDef& skeleton, int level);

BoxMotionSequence skeleton_to_boxes(const SkeletonMotion& motion, const Partition& grouping,
                                    double padding = kJointBoxPadding);

LabeledBoxes augment_sequence(const LabeledBoxes& pair, const AugmentConfig& cfg);

SkeletonMotion gen_procedural_motion(const std::string& label, const ProceduralConfig& cfg, int index);

std::vector<DatasetItem> build_dataset(const ProceduralConfig& cfg, const std::set<int>& levels,
                                       const AugmentConfig& aug);

/// Order-independent per-item seed.
std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> keys);

}  // namespace proxymotion
