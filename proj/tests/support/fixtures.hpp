#pragma once

#include <optional>
#include <set>
#include <utility>
#include <vector>

#include "proxymotion/synthesis.hpp"
#include "proxymotion/types.hpp"

namespace testsupport {

// Two-part proxy on a level floor: a sliding base block and an arm hinged
// on its top edge, turning 1 degree per frame about the base's z axis. Every
// part is sampled as a full lattice, so PCA recovers the true box. The arm's tracks are all
// hidden on the occluded frames; on the partial frames only four tracks
// stay visible.
struct HingeFixture {
  proxymotion::CaptureSession session;
  // Ground-truth boxes per frame and part, in capture coordinates.
  std::vector<std::vector<proxymotion::BoxPose>> truth;
  std::set<std::pair<int, int>> occluded;  // (frame, part)
  std::set<int> partial_frames;
};

HingeFixture make_hinge_fixture(int frames = 60);

// Points of a lattice filling the box, nx x ny x nz including the corners.
std::vector<proxymotion::Vec3> box_lattice(const proxymotion::BoxPose& box, int nx, int ny, int nz);

// Keyframe fixture: five keys of two boxes with distinct rotations.
proxymotion::BoxMotionSequence make_key_fixture();

// Box sequence built from a procedural motion at the given level.
proxymotion::BoxMotionSequence boxes_from_motion(const proxymotion::SkeletonMotion& motion, int level);

}  // namespace testsupport
