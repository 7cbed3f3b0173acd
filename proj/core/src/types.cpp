#include "proxymotion/types.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <set>

#include "proxymotion/errors.hpp"

namespace proxymotion {

namespace {

void require(bool ok, const std::string& message) {
  if (!ok) throw Error(ErrorKind::kInvariant, message);
}

bool finite(const Vec3& v) { return v.allFinite(); }

}  // namespace

RigidTransform::RigidTransform() : rotation_(Quat::Identity()), translation_(Vec3::Zero()) {}

RigidTransform::RigidTransform(const Quat& rotation, const Vec3& translation)
    : rotation_(rotation), translation_(translation) {
  require(rotation.coeffs().allFinite() && finite(translation), "non-finite rigid transform");
  require(std::abs(rotation.norm() - 1.0) <= kQuatNormTolerance, "rotation quaternion is not unit");
}

RigidTransform RigidTransform::from_matrix(const Mat3& rotation, const Vec3& translation) {
  require(rotation.allFinite(), "non-finite rotation matrix");
  require((rotation.transpose() * rotation - Mat3::Identity()).cwiseAbs().maxCoeff() < 1e-6,
          "rotation matrix is not orthonormal");
  require(rotation.determinant() > 0.0, "rotation matrix is a reflection");
  Quat q(rotation);
  q.normalize();
  return RigidTransform(q, translation);
}

RigidTransform RigidTransform::operator*(const RigidTransform& rhs) const {
  Quat q = rotation_ * rhs.rotation_;
  q.normalize();
  return RigidTransform(q, rotation_ * rhs.translation_ + translation_);
}

RigidTransform RigidTransform::inverse() const {
  const Quat inv = rotation_.conjugate();
  return RigidTransform(inv, -(inv * translation_));
}

BoxPose::BoxPose(const Vec3& center, const Quat& rotation, const Vec3& half_extents)
    : center_(center), rotation_(rotation), half_extents_(half_extents) {
  require(finite(center) && rotation.coeffs().allFinite() && finite(half_extents),
          "non-finite box");
  require(std::abs(rotation.norm() - 1.0) <= kQuatNormTolerance, "box rotation is not unit");
  require(half_extents.minCoeff() > 0.0, "box half extents must be positive");
  require(half_extents[0] >= half_extents[1] && half_extents[1] >= half_extents[2],
          "box half extents must be sorted descending");
}

BoxPose BoxPose::canonical(const Vec3& center, const Mat3& axes, const Vec3& half_extents) {
  std::array<int, 3> order{0, 1, 2};
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return half_extents[a] > half_extents[b]; });
  Mat3 sorted_axes;
  Vec3 sorted_extents;
  for (int k = 0; k < 3; ++k) {
    sorted_axes.col(k) = axes.col(order[k]).normalized();
    sorted_extents[k] = half_extents[order[k]];
  }
  for (int k = 0; k < 2; ++k) {
    for (int r = 0; r < 3; ++r) {
      const double v = sorted_axes(r, k);
      if (std::abs(v) > 1e-12) {
        if (v < 0.0) sorted_axes.col(k) = -sorted_axes.col(k);
        break;
      }
    }
  }
  // Re-orthogonalize the second axis against the first so the quaternion is exact.
  Vec3 a0 = sorted_axes.col(0).normalized();
  Vec3 a1 = (sorted_axes.col(1) - a0.dot(sorted_axes.col(1)) * a0).normalized();
  sorted_axes.col(0) = a0;
  sorted_axes.col(1) = a1;
  sorted_axes.col(2) = a0.cross(a1);
  Quat q(sorted_axes);
  q.normalize();
  return BoxPose(center, q, sorted_extents);
}

BoxPose BoxPose::transformed(const RigidTransform& transform) const {
  Quat q = transform.rotation() * rotation_;
  q.normalize();
  return BoxPose(transform.apply(center_), q, half_extents_);
}

BoxPose BoxPose::scaled(double factor) const {
  return BoxPose(center_ * factor, rotation_, half_extents_ * factor);
}

bool BoxPose::contains(const Vec3& p, double margin) const {
  const Vec3 local = rotation_.conjugate() * (p - center_);
  return (local.cwiseAbs().array() <= (half_extents_.array() + margin)).all();
}

bool operator==(const BoxPose& a, const BoxPose& b) {
  return a.center_ == b.center_ && a.rotation_.coeffs() == b.rotation_.coeffs() &&
         a.half_extents_ == b.half_extents_;
}

BoxMotionSequence::BoxMotionSequence(double fps, int num_boxes, std::vector<Frame> frames)
    : fps_(fps), num_boxes_(num_boxes), frames_(std::move(frames)) {
  require(std::isfinite(fps) && fps > 0.0, "fps must be positive");
  require(num_boxes >= 1 && num_boxes <= kMaxBoxes, "num_boxes must lie in [1, 6]");
  require(!frames_.empty(), "box sequence needs at least one frame");
  for (const Frame& frame : frames_) {
    require(static_cast<int>(frame.size()) == num_boxes, "every frame needs num_boxes slots");
  }
  for (int b = 0; b < num_boxes; ++b) {
    require(frames_.front()[static_cast<std::size_t>(b)].has_value(),
            "every box must be present in frame 0");
  }
}

bool BoxMotionSequence::present(int f, int b) const {
  return frame(f).at(static_cast<std::size_t>(b)).has_value();
}

const BoxPose& BoxMotionSequence::box(int f, int b) const {
  const auto& slot = frame(f).at(static_cast<std::size_t>(b));
  if (!slot) throw Error(ErrorKind::kInvariant, "box slot is empty");
  return *slot;
}

bool operator==(const BoxMotionSequence& a, const BoxMotionSequence& b) {
  return a.fps_ == b.fps_ && a.num_boxes_ == b.num_boxes_ && a.frames_ == b.frames_;
}

SkeletonDef::SkeletonDef(std::string name, std::vector<std::string> joint_names,
                         std::vector<int> parents, std::map<int, Partition> groupings)
    : name_(std::move(name)),
      joint_names_(std::move(joint_names)),
      parents_(std::move(parents)),
      groupings_(std::move(groupings)) {
  const int n = static_cast<int>(joint_names_.size());
  require(n >= 1, "skeleton needs at least one joint");
  require(static_cast<int>(parents_.size()) == n, "one parent per joint");
  require(std::count(parents_.begin(), parents_.end(), -1) == 1, "skeleton must have one root");
  for (int j = 0; j < n; ++j) {
    int cursor = j;
    int steps = 0;
    while (parents_[static_cast<std::size_t>(cursor)] != -1) {
      cursor = parents_[static_cast<std::size_t>(cursor)];
      require(cursor >= 0 && cursor < n, "parent index out of range");
      require(++steps <= n, "skeleton parents contain a cycle");
    }
  }
  for (const auto& [level, parts] : groupings_) {
    require(static_cast<int>(parts.size()) == level, "grouping level must equal its part count");
    std::vector<int> seen(static_cast<std::size_t>(n), 0);
    for (const auto& part : parts) {
      require(!part.empty(), "grouping has an empty part");
      for (int j : part) {
        require(j >= 0 && j < n, "grouping joint out of range");
        ++seen[static_cast<std::size_t>(j)];
      }
    }
    require(std::all_of(seen.begin(), seen.end(), [](int c) { return c == 1; }),
            "grouping must cover every joint exactly once");
  }
}

int SkeletonDef::joint_index(const std::string& name) const {
  const auto it = std::find(joint_names_.begin(), joint_names_.end(), name);
  if (it == joint_names_.end()) throw Error(ErrorKind::kInvariant, "unknown joint " + name);
  return static_cast<int>(it - joint_names_.begin());
}

SkeletonMotion::SkeletonMotion(double fps, std::string skeleton, Eigen::MatrixXd joints,
                               std::optional<std::string> label)
    : fps_(fps), skeleton_(std::move(skeleton)), joints_(std::move(joints)), label_(std::move(label)) {
  require(std::isfinite(fps) && fps > 0.0, "fps must be positive");
  require(joints_.rows() >= 1 && joints_.cols() >= 3 && joints_.cols() % 3 == 0,
          "joints must be F x 3J with F, J >= 1");
  require(joints_.allFinite(), "joint coordinates must be finite");
  double min_y = joints_(0, 1);
  for (Eigen::Index c = 1; c < joints_.cols(); c += 3) min_y = std::min(min_y, joints_.col(c).minCoeff());
  require(min_y >= -kGroundTolerance, "joints fall below the ground tolerance");
}

bool operator==(const SkeletonMotion& a, const SkeletonMotion& b) {
  return a.fps_ == b.fps_ && a.skeleton_ == b.skeleton_ && a.label_ == b.label_ &&
         a.joints_.rows() == b.joints_.rows() && a.joints_.cols() == b.joints_.cols() &&
         a.joints_ == b.joints_;
}

CaptureSession::CaptureSession(double fps, std::vector<std::vector<CapturePoint>> frames,
                               std::vector<PointTrack> tracks, int ground_segment_id)
    : fps_(fps), frames_(std::move(frames)), tracks_(std::move(tracks)), ground_segment_id_(ground_segment_id) {
  require(std::isfinite(fps) && fps > 0.0, "fps must be positive");
  require(!frames_.empty(), "capture needs at least one frame");
  for (const auto& frame : frames_) {
    for (const auto& p : frame) {
      require(finite(p.position), "non-finite point position");
      require(p.confidence >= 0.0 && p.confidence <= 1.0, "point confidence must lie in [0, 1]");
    }
  }
  const std::vector<int> known = segments();
  const std::size_t num_frames = frames_.size();
  for (const auto& track : tracks_) {
    require(std::binary_search(known.begin(), known.end(), track.segment_id),
            "track " + std::to_string(track.id) + " references a segment absent from frame 0");
    require(track.positions.size() == num_frames && track.visible.size() == num_frames,
            "track " + std::to_string(track.id) + " must have one entry per frame");
    for (std::size_t f = 0; f < num_frames; ++f) {
      require(track.positions[f].has_value() == static_cast<bool>(track.visible[f]),
              "track " + std::to_string(track.id) + " position/visibility mismatch");
      if (track.positions[f]) require(finite(*track.positions[f]), "non-finite track position");
    }
  }
}

std::vector<int> CaptureSession::segments() const {
  std::set<int> ids;
  for (const auto& p : frames_.front()) ids.insert(p.segment_id);
  return {ids.begin(), ids.end()};
}

LabelVocabulary::LabelVocabulary()
    : LabelVocabulary({"idle", "walk", "jump", "wave", "crouch", "spin"}) {}

LabelVocabulary::LabelVocabulary(std::vector<std::string> labels) : labels_(std::move(labels)) {
  std::set<std::string> unique(labels_.begin(), labels_.end());
  require(unique.size() == labels_.size(), "labels must be unique");
  require(!labels_.empty(), "vocabulary needs at least one label");
}

int LabelVocabulary::index_of(const std::optional<std::string>& label) const {
  if (!label) return 0;
  const auto it = std::find(labels_.begin(), labels_.end(), *label);
  if (it == labels_.end()) throw Error(ErrorKind::kUnknownLabel, *label);
  return static_cast<int>(it - labels_.begin()) + 1;
}

std::optional<std::string> LabelVocabulary::label_at(int index) const {
  if (index == 0) return std::nullopt;
  if (index < 0 || index > static_cast<int>(labels_.size())) {
    throw Error(ErrorKind::kUnknownLabel, "label index " + std::to_string(index));
  }
  return labels_[static_cast<std::size_t>(index - 1)];
}

bool LabelVocabulary::contains(const std::string& label) const {
  return std::find(labels_.begin(), labels_.end(), label) != labels_.end();
}

}  // namespace proxymotion
