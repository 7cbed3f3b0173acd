#include "proxymotion/geometry.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>

#include "proxymotion/errors.hpp"

namespace proxymotion {

namespace {

constexpr double kDegenerateGap = 1e-9;
constexpr double kPi = 3.14159265358979323846;

struct Moments {
  Vec3 mean = Vec3::Zero();
  Mat3 covariance = Mat3::Zero();
};

Moments moments(std::span<const Vec3> points) {
  Moments m;
  for (const Vec3& p : points) m.mean += p;
  m.mean /= static_cast<double>(points.size());
  for (const Vec3& p : points) {
    const Vec3 d = p - m.mean;
    m.covariance += d * d.transpose();
  }
  m.covariance /= static_cast<double>(points.size());
  return m;
}

// Extent of the points along the three columns of axes.
struct Projection {
  Vec3 lo;
  Vec3 hi;
};

Projection project(std::span<const Vec3> points, const Mat3& axes) {
  Projection pr{Vec3::Constant(std::numeric_limits<double>::infinity()),
                Vec3::Constant(-std::numeric_limits<double>::infinity())};
  for (const Vec3& p : points) {
    const Vec3 local = axes.transpose() * p;
    pr.lo = pr.lo.cwiseMin(local);
    pr.hi = pr.hi.cwiseMax(local);
  }
  return pr;
}

double spread_product(std::span<const Vec3> points, const Mat3& axes, int first, int count) {
  const Projection pr = project(points, axes);
  double v = 1.0;
  for (int k = first; k < first + count; ++k) v *= pr.hi[k] - pr.lo[k];
  return v;
}

Mat3 rotation_about(const Vec3& axis, double angle) {
  return Eigen::AngleAxisd(angle, axis.normalized()).toRotationMatrix();
}

// Completes a frame from one unit axis using the world axis least aligned with it.
Mat3 complete_frame(const Vec3& a0) {
  int pick = 0;
  for (int k = 1; k < 3; ++k) {
    if (std::abs(a0[k]) < std::abs(a0[pick]) - 1e-12) pick = k;
  }
  Vec3 a1 = Vec3::Unit(pick) - a0[pick] * a0;
  a1.normalize();
  Mat3 axes;
  axes.col(0) = a0;
  axes.col(1) = a1;
  axes.col(2) = a0.cross(a1);
  return axes;
}

// Compass search over angle within the plane spanned by columns 0 and 1 of
// axes (rotation about column 2), minimizing the projected area.
Mat3 refine_in_plane(std::span<const Vec3> points, const Mat3& axes) {
  const Vec3 normal = axes.col(2);
  auto area = [&](double theta) {
    return spread_product(points, rotation_about(normal, theta) * axes, 0, 2);
  };
  constexpr int kSamples = 90;
  double best = 0.0;
  double best_area = area(0.0);
  for (int i = 1; i < kSamples; ++i) {
    const double theta = 0.5 * kPi * i / kSamples;
    const double a = area(theta);
    if (a < best_area) {
      best_area = a;
      best = theta;
    }
  }
  double step = 0.5 * kPi / kSamples;
  while (step > 1e-13) {
    const double lo = area(best - step);
    const double hi = area(best + step);
    if (lo < best_area && lo <= hi) {
      best_area = lo;
      best -= step;
    } else if (hi < best_area) {
      best_area = hi;
      best += step;
    } else {
      step *= 0.5;
    }
  }
  return rotation_about(normal, best) * axes;
}

// Minimum-volume orientation search used when the covariance is isotropic.
Mat3 refine_volume(std::span<const Vec3> points) {
  auto volume = [&](const Mat3& axes) { return spread_product(points, axes, 0, 3); };
  constexpr int kSteps = 8;
  const double coarse = 0.5 * kPi / kSteps;
  Mat3 best = Mat3::Identity();
  double best_volume = volume(best);
  for (int i = 0; i < kSteps; ++i) {
    for (int j = 0; j < kSteps; ++j) {
      for (int k = 0; k < kSteps; ++k) {
        const Mat3 r = rotation_about(Vec3::UnitZ(), coarse * i) *
                       rotation_about(Vec3::UnitY(), coarse * j) *
                       rotation_about(Vec3::UnitX(), coarse * k);
        const double v = volume(r);
        if (v < best_volume) {
          best_volume = v;
          best = r;
        }
      }
    }
  }
  double step = coarse;
  while (step > 1e-13) {
    bool improved = false;
    for (int axis = 0; axis < 3 && !improved; ++axis) {
      for (double sign : {-1.0, 1.0}) {
        const Mat3 candidate = rotation_about(best.col(axis), sign * step) * best;
        const double v = volume(candidate);
        if (v < best_volume) {
          best_volume = v;
          best = candidate;
          improved = true;
          break;
        }
      }
    }
    if (!improved) step *= 0.5;
  }
  return best;
}

// Principal axes, largest variance first, with degenerate eigenspaces
// resolved by a minimum-extent search or a deterministic completion.
Mat3 principal_axes(std::span<const Vec3> points, const Mat3& covariance) {
  Eigen::SelfAdjointEigenSolver<Mat3> solver(covariance);
  const Vec3 lambda = solver.eigenvalues();  // ascending
  const Mat3 vectors = solver.eigenvectors();
  const double top = lambda[2];
  if (!(top > 0.0)) return Mat3::Identity();

  const bool upper_tie = (lambda[2] - lambda[1]) <= kDegenerateGap * top;
  const bool lower_tie = (lambda[1] - lambda[0]) <= kDegenerateGap * top;
  const bool flat_middle = lambda[1] <= kDegenerateGap * top;

  Mat3 axes;
  axes.col(0) = vectors.col(2);
  axes.col(1) = vectors.col(1);
  axes.col(2) = vectors.col(0);

  if (upper_tie && lower_tie) return refine_volume(points);
  if (flat_middle) return complete_frame(axes.col(0).normalized());
  if (upper_tie) {
    axes.col(2) = axes.col(0).cross(axes.col(1));
    return refine_in_plane(points, axes);
  }
  if (lower_tie) {
    // Rotate so the tied pair occupies columns 0 and 1 for the search.
    Mat3 tied;
    tied.col(0) = axes.col(1);
    tied.col(1) = axes.col(2);
    tied.col(2) = axes.col(0);
    tied.col(1) = tied.col(2).cross(tied.col(0));
    const Mat3 refined = refine_in_plane(points, tied);
    Mat3 out;
    out.col(0) = refined.col(2);
    out.col(1) = refined.col(0);
    out.col(2) = refined.col(1);
    return out;
  }
  axes.col(2) = axes.col(0).cross(axes.col(1));
  return axes;
}

BoxPose box_from_axes(std::span<const Vec3> points, const Mat3& axes, double padding) {
  const Projection pr = project(points, axes);
  const Vec3 mid = 0.5 * (pr.lo + pr.hi);
  Vec3 half = 0.5 * (pr.hi - pr.lo);
  for (int k = 0; k < 3; ++k) half[k] = std::max(half[k] + padding, kMinHalfExtent);
  return BoxPose::canonical(axes * mid, axes, half);
}

bool collinear(std::span<const Vec3> points) {
  const Moments m = moments(points);
  Eigen::SelfAdjointEigenSolver<Mat3> solver(m.covariance, Eigen::EigenvaluesOnly);
  const Vec3 lambda = solver.eigenvalues();
  return !(lambda[2] > 0.0) || lambda[1] <= 1e-12 * lambda[2];
}

}  // namespace

void FilterConfig::validate() const {
  if (!(confidence_min >= 0.0 && confidence_min <= 1.0) || knn_k < 1 || !(knn_sigma > 0.0)) {
    throw Error(ErrorKind::kInvariant, "invalid filter config");
  }
}

void NormalizeConfig::validate() const {
  if (!(target_height > 0.0) || !(smoothing >= 0.0 && smoothing < 1.0)) {
    throw Error(ErrorKind::kInvariant, "invalid normalize config");
  }
}

std::vector<Vec3> filter_points(std::span<const WeightedPoint> points, const FilterConfig& cfg) {
  cfg.validate();
  if (points.empty()) throw Error(ErrorKind::kEmptyAfterFilter, "no input points");
  std::vector<Vec3> candidates;
  for (const auto& p : points) {
    if (p.confidence >= cfg.confidence_min) candidates.push_back(p.position);
  }
  if (candidates.empty()) throw Error(ErrorKind::kEmptyAfterFilter, "every point is below confidence_min");
  const std::size_t n = candidates.size();
  if (n == 1) return candidates;

  const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(cfg.knn_k), n - 1);
  std::vector<double> stat(n);
  std::vector<double> dist(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t m = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) dist[m++] = (candidates[i] - candidates[j]).norm();
    }
    std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k),
                      dist.begin() + static_cast<std::ptrdiff_t>(m));
    stat[i] = std::accumulate(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), 0.0) /
              static_cast<double>(k);
  }
  const double mean = std::accumulate(stat.begin(), stat.end(), 0.0) / static_cast<double>(n);
  double var = 0.0;
  for (double s : stat) var += (s - mean) * (s - mean);
  const double threshold = mean + cfg.knn_sigma * std::sqrt(var / static_cast<double>(n));

  std::vector<Vec3> kept;
  for (std::size_t i = 0; i < n; ++i) {
    if (stat[i] <= threshold) kept.push_back(candidates[i]);
  }
  if (kept.empty()) throw Error(ErrorKind::kEmptyAfterFilter, "outlier test removed every point");
  return kept;
}

BoxPose fit_obb(std::span<const Vec3> points) {
  if (points.size() < 4) throw Error(ErrorKind::kInsufficientPoints, "need at least 4 points");
  const Moments m = moments(points);
  if (!(m.covariance.trace() > 0.0)) throw Error(ErrorKind::kDegenerateCloud, "all points coincide");
  return box_from_axes(points, principal_axes(points, m.covariance), 0.0);
}

BoxPose fit_obb_relaxed(std::span<const Vec3> points, double padding) {
  if (points.empty()) throw Error(ErrorKind::kInsufficientPoints, "no points to fit");
  const Moments m = moments(points);
  return box_from_axes(points, principal_axes(points, m.covariance), padding);
}

RigidTransform estimate_rigid(std::span<const Vec3> src, std::span<const Vec3> dst) {
  if (src.size() != dst.size()) {
    throw Error(ErrorKind::kDegenerateCorrespondences, "src and dst differ in length");
  }
  if (src.size() < 3) throw Error(ErrorKind::kDegenerateCorrespondences, "need at least 3 points");
  if (collinear(src)) throw Error(ErrorKind::kDegenerateCorrespondences, "src points are collinear");

  const Vec3 src_mean = moments(src).mean;
  Vec3 dst_mean = Vec3::Zero();
  for (const Vec3& p : dst) dst_mean += p;
  dst_mean /= static_cast<double>(dst.size());

  Mat3 cross = Mat3::Zero();
  for (std::size_t i = 0; i < src.size(); ++i) {
    cross += (src[i] - src_mean) * (dst[i] - dst_mean).transpose();
  }
  Eigen::JacobiSVD<Mat3> svd(cross, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Mat3& u = svd.matrixU();
  Mat3 v = svd.matrixV();
  // Reflection: flip the singular vector paired with the smallest singular value.
  if ((v * u.transpose()).determinant() < 0.0) v.col(2) = -v.col(2);
  const Mat3 rotation = v * u.transpose();
  return RigidTransform::from_matrix(rotation, dst_mean - rotation * src_mean);
}

RigidTransform calibrate_up(const CaptureSession& session) {
  std::vector<Vec3> ground;
  Vec3 others = Vec3::Zero();
  std::size_t num_others = 0;
  for (const auto& p : session.frames().front()) {
    if (p.segment_id == session.ground_segment_id()) {
      ground.push_back(p.position);
    } else {
      others += p.position;
      ++num_others;
    }
  }
  if (ground.size() < 10) throw Error(ErrorKind::kInsufficientPoints, "ground needs at least 10 points");
  const Moments m = moments(ground);
  Eigen::SelfAdjointEigenSolver<Mat3> solver(m.covariance);
  const Vec3 lambda = solver.eigenvalues();
  if (!(lambda[2] > 0.0) || lambda[0] > 0.05 * lambda[2]) {
    throw Error(ErrorKind::kGroundNotPlanar, "ground points do not fit a plane");
  }
  Vec3 normal = solver.eigenvectors().col(0).normalized();
  if (num_others > 0) {
    const Vec3 scene = others / static_cast<double>(num_others);
    if ((scene - m.mean).dot(normal) < 0.0) normal = -normal;
  } else if (normal.y() < 0.0) {
    normal = -normal;
  }
  Quat q = Quat::FromTwoVectors(normal, Vec3::UnitY());
  q.normalize();
  const double height = (q * m.mean).y();
  return RigidTransform(q, Vec3(0.0, -height, 0.0));
}

BoxMotionSequence propagate_boxes(const CaptureSession& session, const FilterConfig& filter_cfg,
                                  const NormalizeConfig& norm_cfg) {
  filter_cfg.validate();
  norm_cfg.validate();

  std::vector<int> parts;
  for (int id : session.segments()) {
    if (id != session.ground_segment_id()) parts.push_back(id);
  }
  if (parts.empty()) throw Error(ErrorKind::kNoValidParts, "capture has no non-ground segment");
  if (static_cast<int>(parts.size()) > kMaxBoxes) {
    throw Error(ErrorKind::kInvariant, "at most 6 proxy parts are supported");
  }

  const RigidTransform up = calibrate_up(session);
  const int num_frames = session.num_frames();
  const int num_parts = static_cast<int>(parts.size());

  std::vector<BoxPose> initial;
  for (int id : parts) {
    std::vector<WeightedPoint> cloud;
    for (const auto& p : session.frames().front()) {
      if (p.segment_id == id) cloud.push_back({p.position, p.confidence});
    }
    const std::vector<Vec3> kept = filter_points(cloud, filter_cfg);
    initial.push_back(fit_obb(kept));
  }

  std::vector<std::vector<const PointTrack*>> tracks_of(parts.size());
  for (const auto& track : session.tracks()) {
    const auto it = std::find(parts.begin(), parts.end(), track.segment_id);
    if (it != parts.end()) tracks_of[static_cast<std::size_t>(it - parts.begin())].push_back(&track);
  }

  std::vector<BoxMotionSequence::Frame> frames(static_cast<std::size_t>(num_frames),
                                               BoxMotionSequence::Frame(parts.size()));
  for (int b = 0; b < num_parts; ++b) {
    const auto bi = static_cast<std::size_t>(b);
    frames[0][bi] = initial[bi].transformed(up);
    for (int f = 1; f < num_frames; ++f) {
      const auto fi = static_cast<std::size_t>(f);
      std::vector<Vec3> src;
      std::vector<Vec3> dst;
      for (const PointTrack* track : tracks_of[bi]) {
        if (track->visible[0] && track->visible[fi]) {
          src.push_back(*track->positions[0]);
          dst.push_back(*track->positions[fi]);
        }
      }
      if (src.size() < 3 || collinear(src)) continue;
      frames[fi][bi] = initial[bi].transformed(up * estimate_rigid(src, dst));
    }
  }

  // Frame-0 union: recentre horizontally, then scale to the target height.
  Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 hi = -lo;
  for (const auto& slot : frames.front()) {
    const Mat3 axes = slot->axes();
    const Vec3& e = slot->half_extents();
    for (int corner = 0; corner < 8; ++corner) {
      const Vec3 sign((corner & 4) ? -1.0 : 1.0, (corner & 2) ? -1.0 : 1.0, (corner & 1) ? -1.0 : 1.0);
      const Vec3 v = slot->center() + axes * sign.cwiseProduct(e);
      lo = lo.cwiseMin(v);
      hi = hi.cwiseMax(v);
    }
  }
  const double height = hi.y() - lo.y();
  const double scale = norm_cfg.target_height / height;
  const RigidTransform recentre(Quat::Identity(), Vec3(-0.5 * (lo.x() + hi.x()), 0.0, -0.5 * (lo.z() + hi.z())));
  for (auto& frame : frames) {
    for (auto& slot : frame) {
      if (slot) slot = slot->transformed(recentre).scaled(scale);
    }
  }

  if (norm_cfg.smoothing > 0.0) {
    const double alpha = norm_cfg.smoothing;
    for (int b = 0; b < num_parts; ++b) {
      const auto bi = static_cast<std::size_t>(b);
      BoxPose previous = *frames[0][bi];
      for (int f = 1; f < num_frames; ++f) {
        auto& slot = frames[static_cast<std::size_t>(f)][bi];
        if (!slot) continue;
        Quat q = slot->rotation();
        if (q.coeffs().dot(previous.rotation().coeffs()) < 0.0) q.coeffs() = -q.coeffs();
        Quat blended;
        blended.coeffs() = alpha * previous.rotation().coeffs() + (1.0 - alpha) * q.coeffs();
        blended.normalize();
        const Vec3 center = alpha * previous.center() + (1.0 - alpha) * slot->center();
        slot = BoxPose(center, blended, slot->half_extents());
        previous = *slot;
      }
    }
  }
  return BoxMotionSequence(session.fps(), num_parts, std::move(frames));
}

BoxPose interpolate_pose(const BoxPose& a, const BoxPose& b, double t) {
  const double scale = std::max(1.0, a.half_extents().cwiseAbs().maxCoeff());
  if ((a.half_extents() - b.half_extents()).cwiseAbs().maxCoeff() > 1e-9 * scale) {
    throw Error(ErrorKind::kExtentMismatch, "keyframe boxes differ in extent");
  }
  if (!(t >= 0.0 && t <= 1.0)) throw Error(ErrorKind::kInvariant, "interpolation parameter outside [0, 1]");
  if (t == 0.0) return a;
  if (t == 1.0) return b;
  Quat q = a.rotation().slerp(t, b.rotation());
  q.normalize();
  return BoxPose(a.center() + t * (b.center() - a.center()), q, a.half_extents());
}

BoxMotionSequence expand_keyframes(const BoxMotionSequence& keys, std::span<const int> frames_between) {
  const int num_keys = keys.num_frames();
  if (num_keys < 2) throw Error(ErrorKind::kInvariant, "need at least two keyframes");
  if (static_cast<int>(frames_between.size()) != num_keys - 1) {
    throw Error(ErrorKind::kInvariant, "frames_between needs one count per gap");
  }
  for (int f = 0; f < num_keys; ++f) {
    for (int b = 0; b < keys.num_boxes(); ++b) {
      if (!keys.present(f, b)) {
        throw Error(ErrorKind::kMissingKeyBox,
                    "key " + std::to_string(f) + " lacks box " + std::to_string(b));
      }
    }
  }
  std::vector<BoxMotionSequence::Frame> out;
  for (int k = 0; k < num_keys; ++k) {
    out.push_back(keys.frame(k));
    if (k + 1 == num_keys) break;
    const int count = frames_between[static_cast<std::size_t>(k)];
    if (count < 0) throw Error(ErrorKind::kInvariant, "frames_between must be non-negative");
    for (int j = 1; j <= count; ++j) {
      const double t = static_cast<double>(j) / static_cast<double>(count + 1);
      BoxMotionSequence::Frame frame;
      for (int b = 0; b < keys.num_boxes(); ++b) {
        frame.emplace_back(interpolate_pose(keys.box(k, b), keys.box(k + 1, b), t));
      }
      out.push_back(std::move(frame));
    }
  }
  return BoxMotionSequence(keys.fps(), keys.num_boxes(), std::move(out));
}

}  // namespace proxymotion
