#include "proxymotion/skeleton.hpp"

namespace proxymotion {

namespace humanoid {

namespace {

JointPositions make_rest() {
  JointPositions p;
  p << 0.00, 0.95, 0.00,     // pelvis
      0.09, 0.88, 0.00,      // left hip
      -0.09, 0.88, 0.00,     // right hip
      0.00, 1.05, -0.01,     // spine1
      0.10, 0.50, 0.01,      // left knee
      -0.10, 0.50, 0.01,     // right knee
      0.00, 1.18, -0.01,     // spine2
      0.10, 0.10, -0.01,     // left ankle
      -0.10, 0.10, -0.01,    // right ankle
      0.00, 1.25, 0.00,      // spine3
      0.10, 0.04, 0.11,      // left foot
      -0.10, 0.04, 0.11,     // right foot
      0.00, 1.42, 0.00,      // neck
      0.07, 1.37, 0.00,      // left collar
      -0.07, 1.37, 0.00,     // right collar
      0.00, 1.55, 0.03,      // head
      0.18, 1.38, 0.00,      // left shoulder
      -0.18, 1.38, 0.00,     // right shoulder
      0.21, 1.12, -0.01,     // left elbow
      -0.21, 1.12, -0.01,    // right elbow
      0.23, 0.88, 0.02,      // left wrist
      -0.23, 0.88, 0.02;     // right wrist
  return p;
}

JointPositions make_t_pose() {
  JointPositions p = make_rest();
  p.row(kLeftElbow) << 0.44, 1.38, 0.00;
  p.row(kRightElbow) << -0.44, 1.38, 0.00;
  p.row(kLeftWrist) << 0.68, 1.38, 0.00;
  p.row(kRightWrist) << -0.68, 1.38, 0.00;
  return p;
}

constexpr std::array<int, kNumJoints> kParents = {-1, 0, 0, 0, 1, 2, 3, 4, 5, 6, 7,
                                                  8, 9, 9, 9, 12, 13, 14, 16, 17, 18, 19};

}  // namespace

const JointPositions& rest_pose() {
  static const JointPositions pose = make_rest();
  return pose;
}

const JointPositions& t_pose() {
  static const JointPositions pose = make_t_pose();
  return pose;
}

Eigen::RowVectorXd forward_kinematics(const JointPositions& rest, const Pose& pose) {
  std::array<Quat, kNumJoints> global;
  JointPositions out;
  global[0] = pose.root_rotation * pose.local[0];
  out.row(0) = (rest.row(0).transpose() + pose.root_offset).transpose();
  for (int j = 1; j < kNumJoints; ++j) {
    const int parent = kParents[static_cast<std::size_t>(j)];
    const Vec3 bone = (rest.row(j) - rest.row(parent)).transpose();
    out.row(j) = out.row(parent) + (global[static_cast<std::size_t>(parent)] * bone).transpose();
    global[static_cast<std::size_t>(j)] = global[static_cast<std::size_t>(parent)] * pose.local[static_cast<std::size_t>(j)];
  }
  return flatten(out);
}

Eigen::RowVectorXd flatten(const JointPositions& joints) {
  Eigen::RowVectorXd row(3 * kNumJoints);
  for (int j = 0; j < kNumJoints; ++j) row.segment<3>(3 * j) = joints.row(j);
  return row;
}

}  // namespace humanoid

const SkeletonDef& SkeletonDef::humanoid22() {
  using namespace humanoid;
  static const SkeletonDef skeleton(
      "humanoid22",
      {"pelvis", "left_hip", "right_hip", "spine1", "left_knee", "right_knee", "spine2",
       "left_ankle", "right_ankle", "spine3", "left_foot", "right_foot", "neck", "left_collar",
       "right_collar", "head", "left_shoulder", "right_shoulder", "left_elbow", "right_elbow",
       "left_wrist", "right_wrist"},
      std::vector<int>(kParents.begin(), kParents.end()),
      {
          {1, {{0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15, 16, 17, 18, 19, 20, 21}}},
          {2,
           {{kSpine1, kSpine2, kSpine3, kNeck, kLeftCollar, kRightCollar, kHead, kLeftShoulder,
             kRightShoulder, kLeftElbow, kRightElbow, kLeftWrist, kRightWrist},
            {kPelvis, kLeftHip, kRightHip, kLeftKnee, kRightKnee, kLeftAnkle, kRightAnkle,
             kLeftFoot, kRightFoot}}},
          {4,
           {{kSpine1, kSpine2, kSpine3, kNeck, kLeftCollar, kRightCollar, kHead},
            {kPelvis, kLeftHip, kRightHip, kLeftKnee, kRightKnee, kLeftAnkle, kRightAnkle,
             kLeftFoot, kRightFoot},
            {kLeftShoulder, kLeftElbow, kLeftWrist},
            {kRightShoulder, kRightElbow, kRightWrist}}},
          {6,
           {{kNeck, kHead},
            {kPelvis, kSpine1, kSpine2, kSpine3, kLeftCollar, kRightCollar},
            {kLeftShoulder, kLeftElbow, kLeftWrist},
            {kRightShoulder, kRightElbow, kRightWrist},
            {kLeftHip, kLeftKnee, kLeftAnkle, kLeftFoot},
            {kRightHip, kRightKnee, kRightAnkle, kRightFoot}}},
      });
  return skeleton;
}

}  // namespace proxymotion
