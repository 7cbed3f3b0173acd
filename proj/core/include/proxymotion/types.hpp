#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace proxymotion {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Quat = Eigen::Quaterniond;

inline constexpr double kQuatNormTolerance = 1e-9;
inline constexpr int kMaxBoxes = 6;

/// Proper rigid motion x -> R x + t with R stored as a unit quaternion.
class RigidTransform {
 public:
  RigidTransform();
  RigidTransform(const Quat& rotation, const Vec3& translation);

  /// Builds from a rotation matrix; rejects reflections and non-orthonormal input.
  static RigidTransform from_matrix(const Mat3& rotation, const Vec3& translation);

  const Quat& rotation() const { return rotation_; }
  const Vec3& translation() const { return translation_; }
  Mat3 matrix() const { return rotation_.toRotationMatrix(); }

  Vec3 apply(const Vec3& p) const { return rotation_ * p + translation_; }
  RigidTransform operator*(const RigidTransform& rhs) const;
  RigidTransform inverse() const;

 private:
  Quat rotation_;
  Vec3 translation_;
};

/// Oriented bounding box. Half extents are positive and sorted descending;
/// column k of the rotation matrix is the axis carrying half_extents[k].
class BoxPose {
 public:
  BoxPose(const Vec3& center, const Quat& rotation, const Vec3& half_extents);

  /// Sorts the extents descending, permutes the axes to match and fixes axis
  /// signs so the first nonzero entry of the first two axes is positive. The
  /// third axis is their cross product, which keeps the frame proper.
  static BoxPose canonical(const Vec3& center, const Mat3& axes, const Vec3& half_extents);

  const Vec3& center() const { return center_; }
  const Quat& rotation() const { return rotation_; }
  const Vec3& half_extents() const { return half_extents_; }
  Mat3 axes() const { return rotation_.toRotationMatrix(); }

  BoxPose transformed(const RigidTransform& transform) const;
  BoxPose scaled(double factor) const;

  bool contains(const Vec3& p, double margin = 0.0) const;

  friend bool operator==(const BoxPose& a, const BoxPose& b);

 private:
  Vec3 center_;
  Quat rotation_;
  Vec3 half_extents_;
};

/// F frames x B box slots. An empty slot means the box could not be
/// estimated in that frame; every box is present in frame 0.
class BoxMotionSequence {
 public:
  using Frame = std::vector<std::optional<BoxPose>>;

  BoxMotionSequence(double fps, int num_boxes, std::vector<Frame> frames);

  double fps() const { return fps_; }
  int num_boxes() const { return num_boxes_; }
  int num_frames() const { return static_cast<int>(frames_.size()); }
  const std::vector<Frame>& frames() const { return frames_; }
  const Frame& frame(int f) const { return frames_.at(static_cast<std::size_t>(f)); }
  bool present(int f, int b) const;
  const BoxPose& box(int f, int b) const;

  friend bool operator==(const BoxMotionSequence& a, const BoxMotionSequence& b);

 private:
  double fps_;
  int num_boxes_;
  std::vector<Frame> frames_;
};

using Partition = std::vector<std::vector<int>>;

class SkeletonDef {
 public:
  SkeletonDef(std::string name, std::vector<std::string> joint_names, std::vector<int> parents,
              std::map<int, Partition> groupings);

  /// Pelvis-rooted 22-joint humanoid with groupings for 1, 2, 4 and 6 parts.
  static const SkeletonDef& humanoid22();

  const std::string& name() const { return name_; }
  int num_joints() const { return static_cast<int>(joint_names_.size()); }
  const std::vector<std::string>& joint_names() const { return joint_names_; }
  const std::vector<int>& parents() const { return parents_; }
  const std::map<int, Partition>& groupings() const { return groupings_; }
  int joint_index(const std::string& name) const;

 private:
  std::string name_;
  std::vector<std::string> joint_names_;
  std::vector<int> parents_;
  std::map<int, Partition> groupings_;
};

inline constexpr double kGroundTolerance = 0.05;

/// Joint positions, one row per frame laid out as [x0 y0 z0 x1 y1 z1 ...].
/// Y is up and the ground is y = 0.
class SkeletonMotion {
 public:
  SkeletonMotion(double fps, std::string skeleton, Eigen::MatrixXd joints,
                 std::optional<std::string> label = std::nullopt);

  double fps() const { return fps_; }
  const std::string& skeleton() const { return skeleton_; }
  const std::optional<std::string>& label() const { return label_; }
  int num_frames() const { return static_cast<int>(joints_.rows()); }
  int num_joints() const { return static_cast<int>(joints_.cols() / 3); }
  const Eigen::MatrixXd& joints() const { return joints_; }
  Vec3 joint(int f, int j) const { return joints_.row(f).segment<3>(3 * j).transpose(); }

  friend bool operator==(const SkeletonMotion& a, const SkeletonMotion& b);

 private:
  double fps_;
  std::string skeleton_;
  Eigen::MatrixXd joints_;
  std::optional<std::string> label_;
};

struct CapturePoint {
  Vec3 position;
  double confidence = 1.0;
  int segment_id = 0;

  friend bool operator==(const CapturePoint&, const CapturePoint&) = default;
};

struct PointTrack {
  int id = 0;
  int segment_id = 0;
  std::vector<std::optional<Vec3>> positions;
  std::vector<bool> visible;

  friend bool operator==(const PointTrack&, const PointTrack&) = default;
};

/// Segmented per-frame point clouds plus global point tracks.
class CaptureSession {
 public:
  CaptureSession(double fps, std::vector<std::vector<CapturePoint>> frames,
                 std::vector<PointTrack> tracks, int ground_segment_id);

  double fps() const { return fps_; }
  int num_frames() const { return static_cast<int>(frames_.size()); }
  const std::vector<std::vector<CapturePoint>>& frames() const { return frames_; }
  const std::vector<PointTrack>& tracks() const { return tracks_; }
  int ground_segment_id() const { return ground_segment_id_; }

  /// Segment ids observed in frame 0, ascending.
  std::vector<int> segments() const;

  friend bool operator==(const CaptureSession&, const CaptureSession&) = default;

 private:
  double fps_;
  std::vector<std::vector<CapturePoint>> frames_;
  std::vector<PointTrack> tracks_;
  int ground_segment_id_;
};

/// Action labels. Class index 0 is the null label; label i maps to index i+1.
class LabelVocabulary {
 public:
  LabelVocabulary();
  explicit LabelVocabulary(std::vector<std::string> labels);

  const std::vector<std::string>& labels() const { return labels_; }
  int num_classes() const { return static_cast<int>(labels_.size()) + 1; }
  int index_of(const std::optional<std::string>& label) const;
  std::optional<std::string> label_at(int index) const;
  bool contains(const std::string& label) const;

 private:
  std::vector<std::string> labels_;
};

}  // namespace proxymotion
