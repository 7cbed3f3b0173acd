#pragma once

#include <array>

#include "proxymotion/types.hpp"

namespace proxymotion::humanoid {

inline constexpr int kNumJoints = 22;

enum Joint : int {
  kPelvis = 0,
  kLeftHip,
  kRightHip,
  kSpine1,
  kLeftKnee,
  kRightKnee,
  kSpine2,
  kLeftAnkle,
  kRightAnkle,
  kSpine3,
  kLeftFoot,
  kRightFoot,
  kNeck,
  kLeftCollar,
  kRightCollar,
  kHead,
  kLeftShoulder,
  kRightShoulder,
  kLeftElbow,
  kRightElbow,
  kLeftWrist,
  kRightWrist,
};

using JointPositions = Eigen::Matrix<double, kNumJoints, 3, Eigen::RowMajor>;

/// Standing pose, arms hanging, facing +Z, left side on +X, feet on y = 0.
const JointPositions& rest_pose();

/// Arms stretched horizontally along +-X.
const JointPositions& t_pose();

/// Local joint rotations relative to the rest pose plus a root transform.
struct Pose {
  Vec3 root_offset = Vec3::Zero();
  Quat root_rotation = Quat::Identity();
  std::array<Quat, kNumJoints> local;

  Pose() { local.fill(Quat::Identity()); }
};

/// Joint positions for a pose, flattened as one [x0 y0 z0 x1 ...] row.
Eigen::RowVectorXd forward_kinematics(const JointPositions& rest, const Pose& pose);

Eigen::RowVectorXd flatten(const JointPositions& joints);

}  // namespace proxymotion::humanoid
