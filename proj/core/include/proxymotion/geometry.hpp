#pragma once

#include <span>
#include <vector>

#include "proxymotion/types.hpp"

namespace proxymotion {

/// Smallest half extent a fitted box may have.
inline constexpr double kMinHalfExtent = 0.01;

struct FilterConfig {
  double confidence_min = 0.5;
  int knn_k = 8;
  double knn_sigma = 2.0;

  void validate() const;
};

struct NormalizeConfig {
  double target_height = 1.6;
  double smoothing = 0.0;  ///< EMA coefficient on the previous value; 0 disables.

  void validate() const;
};

struct WeightedPoint {
  Vec3 position;
  double confidence = 1.0;
};

/// Drops low-confidence points, then points whose mean distance to their k
/// nearest surviving neighbours exceeds mean + sigma * stddev of that statistic.
std::vector<Vec3> filter_points(std::span<const WeightedPoint> points, const FilterConfig& cfg);

/// PCA-aligned box around the points, canonicalized.
BoxPose fit_obb(std::span<const Vec3> points);

/// Same fit without the four-point minimum; used for small joint groups.
/// Degenerate spreads get a deterministic completion of the axis frame.
BoxPose fit_obb_relaxed(std::span<const Vec3> points, double padding = 0.0);

/// Least-squares proper rigid transform taking src onto dst (no scale).
RigidTransform estimate_rigid(std::span<const Vec3> src, std::span<const Vec3> dst);

/// Rotation taking the fitted ground normal to +Y, translated so the ground
/// centroid lands on y = 0.
RigidTransform calibrate_up(const CaptureSession& session);

/// Fits frame-0 boxes per non-ground segment and carries them through the
/// sequence with track-based rigid alignment against frame 0.
BoxMotionSequence propagate_boxes(const CaptureSession& session, const FilterConfig& filter_cfg,
                                  const NormalizeConfig& norm_cfg);

/// Geodesic blend: slerp on rotation, linear on center.
BoxPose interpolate_pose(const BoxPose& a, const BoxPose& b, double t);

/// Inserts frames_between[k] in-betweens after key k.
BoxMotionSequence expand_keyframes(const BoxMotionSequence& keys, std::span<const int> frames_between);

}  // namespace proxymotion
