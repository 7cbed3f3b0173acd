#include "fixtures.hpp"

#include <cmath>

namespace testsupport {

using namespace proxymotion;

std::vector<Vec3> box_lattice(const BoxPose& box, int nx, int ny, int nz) {
  std::vector<Vec3> out;
  const Mat3 axes = box.axes();
  const Vec3& e = box.half_extents();
  for (int i = 0; i < nx; ++i) {
    for (int j = 0; j < ny; ++j) {
      for (int k = 0; k < nz; ++k) {
        const Vec3 u(2.0 * i / (nx - 1) - 1.0, 2.0 * j / (ny - 1) - 1.0, 2.0 * k / (nz - 1) - 1.0);
        out.push_back(box.center() + axes * u.cwiseProduct(e));
      }
    }
  }
  return out;
}

HingeFixture make_hinge_fixture(int frames) {
  constexpr double kPi = 3.14159265358979323846;
  const Quat yaw(Eigen::AngleAxisd(0.35, Vec3::UnitY()));
  const BoxPose base0(Vec3(0.1, 0.3, -0.2), yaw, Vec3(0.4, 0.3, 0.15));
  // The arm's long axis is the base's x axis; the hinge sits on the base's
  // top face at its +x end.
  const Vec3 hinge0 = base0.center() + base0.axes() * Vec3(0.4, 0.3, 0.0);
  const BoxPose arm0(hinge0 + base0.axes() * Vec3(0.35, 0.1, 0.0), yaw, Vec3(0.35, 0.1, 0.05));

  HingeFixture fx{CaptureSession(20.0, {{}}, {}, 0), {}, {}, {}};
  for (int f = 25; f < 30 && f < frames; ++f) fx.occluded.insert({f, 1});
  for (int f = 40; f < 43 && f < frames; ++f) fx.partial_frames.insert(f);

  std::vector<RigidTransform> base_motion;
  std::vector<RigidTransform> arm_motion;
  for (int f = 0; f < frames; ++f) {
    const RigidTransform slide(Quat::Identity(), Vec3(0.004 * f, 0.0, 0.002 * f));
    const double angle = kPi / 180.0 * f;  // 1 degree per frame
    const Quat swing(Eigen::AngleAxisd(angle, base0.axes().col(2)));
    // rotate about the hinge, then slide with the base
    const RigidTransform about_hinge(swing, hinge0 - (swing * hinge0));
    base_motion.push_back(slide);
    arm_motion.push_back(slide * about_hinge);
    fx.truth.push_back({base0.transformed(slide), arm0.transformed(slide * about_hinge)});
  }

  const std::vector<Vec3> base_pts = box_lattice(base0, 7, 6, 4);
  const std::vector<Vec3> arm_pts = box_lattice(arm0, 8, 4, 3);

  std::vector<std::vector<CapturePoint>> points(static_cast<std::size_t>(frames));
  std::vector<PointTrack> tracks;
  int next_id = 0;
  auto add_tracks = [&](const std::vector<Vec3>& pts, const std::vector<RigidTransform>& motion, int segment) {
    for (std::size_t i = 0; i < pts.size(); ++i) {
      PointTrack t;
      t.id = next_id++;
      t.segment_id = segment;
      for (int f = 0; f < frames; ++f) {
        bool visible = true;
        if (segment == 2 && fx.occluded.count({f, 1})) visible = false;
        // four non-collinear tracks survive the partial frames
        if (segment == 2 && fx.partial_frames.count(f) && i % 23 != 0) visible = false;
        t.visible.push_back(visible);
        t.positions.push_back(visible ? std::optional<Vec3>(motion[static_cast<std::size_t>(f)].apply(pts[i]))
                                      : std::nullopt);
      }
      tracks.push_back(std::move(t));
    }
  };
  add_tracks(base_pts, base_motion, 1);
  add_tracks(arm_pts, arm_motion, 2);

  for (int f = 0; f < frames; ++f) {
    auto& frame = points[static_cast<std::size_t>(f)];
    for (int i = -5; i <= 5; ++i) {
      for (int k = -5; k <= 5; ++k) frame.push_back({Vec3(0.25 * i, 0.0, 0.25 * k), 1.0, 0});
    }
    for (const Vec3& p : base_pts) frame.push_back({base_motion[static_cast<std::size_t>(f)].apply(p), 0.95, 1});
    if (!fx.occluded.count({f, 1})) {
      for (const Vec3& p : arm_pts) frame.push_back({arm_motion[static_cast<std::size_t>(f)].apply(p), 0.9, 2});
    }
    // stray low-confidence points the filter must reject
    frame.push_back({Vec3(3.0, 2.0, 3.0), 0.1, 1});
    frame.push_back({Vec3(-3.0, 2.5, 1.0), 0.2, 2});
  }
  fx.session = CaptureSession(20.0, std::move(points), std::move(tracks), 0);
  return fx;
}

BoxMotionSequence make_key_fixture() {
  std::vector<BoxMotionSequence::Frame> keys;
  for (int k = 0; k < 5; ++k) {
    const Quat qa(Eigen::AngleAxisd(0.3 * k, Vec3(0.0, 1.0, 0.0)));
    const Quat qb(Eigen::AngleAxisd(0.5 * k - 0.4, Vec3(1.0, 1.0, 0.0).normalized()));
    keys.push_back({BoxPose(Vec3(0.1 * k, 0.5, 0.0), qa, Vec3(0.3, 0.2, 0.1)),
                    BoxPose(Vec3(0.0, 1.0 + 0.05 * k, -0.2 * k), qb, Vec3(0.25, 0.1, 0.05))});
  }
  return BoxMotionSequence(20.0, 2, std::move(keys));
}

BoxMotionSequence boxes_from_motion(const SkeletonMotion& motion, int level) {
  return skeleton_to_boxes(motion, part_grouping(SkeletonDef::humanoid22(), level));
}

}  // namespace testsupport
