#include "proxymotion/guidance.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "proxymotion/errors.hpp"

namespace proxymotion {

namespace {

void check_shapes(const Eigen::MatrixXd& joints, const BoxMotionSequence& seq) {
  if (joints.rows() != seq.num_frames()) {
    throw Error(ErrorKind::kFrameCountMismatch, "motion has " + std::to_string(joints.rows()) +
                                                    " frames but box sequence has " +
                                                    std::to_string(seq.num_frames()));
  }
  if (joints.cols() == 0 || joints.cols() % 3 != 0) {
    throw Error(ErrorKind::kShapeMismatch, "joint matrix must have 3J columns");
  }
}

Vec3 joint_at(const Eigen::MatrixXd& joints, int f, int j) { return joints.block<1, 3>(f, 3 * j).transpose(); }

}  // namespace

void GuidanceConfig::validate() const {
  if (!(tau > 0.0) || !std::isfinite(tau)) throw Error(ErrorKind::kInvariant, "tau must be positive");
  if (inner_steps < 0) throw Error(ErrorKind::kInvariant, "inner_steps must be non-negative");
  if (!(step_scale >= 0.0)) throw Error(ErrorKind::kInvariant, "step_scale must be non-negative");
  if (!(active_fraction > 0.0 && active_fraction <= 1.0)) {
    throw Error(ErrorKind::kInvariant, "active_fraction must lie in (0, 1]");
  }
  if (!(containment_margin >= 0.0)) throw Error(ErrorKind::kInvariant, "containment_margin must be non-negative");
}

Eigen::VectorXd soft_weights(const Eigen::VectorXd& distances, double tau) {
  if (distances.size() == 0) throw Error(ErrorKind::kShapeMismatch, "soft_weights needs at least one distance");
  if (!(tau > 0.0)) throw Error(ErrorKind::kInvariant, "tau must be positive");
  const Eigen::VectorXd logits = -distances / tau;
  Eigen::VectorXd w = (logits.array() - logits.maxCoeff()).exp();
  return w / w.sum();
}

double guidance_loss_grad(const Eigen::MatrixXd& joints, const BoxMotionSequence& seq, const GuidanceConfig& cfg,
                          Eigen::MatrixXd* grad) {
  check_shapes(joints, seq);
  if (!(cfg.tau > 0.0)) throw Error(ErrorKind::kInvariant, "tau must be positive");
  const int num_joints = static_cast<int>(joints.cols() / 3);
  if (grad) grad->setZero(joints.rows(), joints.cols());

  double total = 0.0;
  long present = 0;
  Eigen::VectorXd d(num_joints);
  for (int f = 0; f < seq.num_frames(); ++f) {
    for (int b = 0; b < seq.num_boxes(); ++b) {
      if (!seq.present(f, b)) continue;
      ++present;
      const Vec3& c = seq.box(f, b).center();
      for (int j = 0; j < num_joints; ++j) d[j] = (joint_at(joints, f, j) - c).norm();
      const Eigen::VectorXd w = soft_weights(d, cfg.tau);
      const double term = w.dot(d);
      total += term;
      if (!grad) continue;
      for (int j = 0; j < num_joints; ++j) {
        if (d[j] == 0.0) continue;
        // dT/dd_j = w_j (1 - (d_j - T) / tau)
        const double dt_dd = w[j] * (1.0 - (d[j] - term) / cfg.tau);
        const Vec3 dir = (joint_at(joints, f, j) - c) / d[j];
        grad->block<1, 3>(f, 3 * j) += dt_dd * dir.transpose();
      }
    }
  }
  if (present == 0) return 0.0;
  const double inv = 1.0 / static_cast<double>(present);
  if (grad) *grad *= inv;
  return total * inv;
}

double guidance_loss(const Eigen::MatrixXd& joints, const BoxMotionSequence& seq, const GuidanceConfig& cfg) {
  return guidance_loss_grad(joints, seq, cfg, nullptr);
}

Eigen::MatrixXd guidance_grad(const Eigen::MatrixXd& joints, const BoxMotionSequence& seq, const GuidanceConfig& cfg) {
  Eigen::MatrixXd g;
  guidance_loss_grad(joints, seq, cfg, &g);
  return g;
}

double containment_rate(const Eigen::MatrixXd& joints, const BoxMotionSequence& seq, const GuidanceConfig& cfg) {
  check_shapes(joints, seq);
  const int num_joints = static_cast<int>(joints.cols() / 3);
  long present = 0;
  long hit = 0;
  for (int f = 0; f < seq.num_frames(); ++f) {
    for (int b = 0; b < seq.num_boxes(); ++b) {
      if (!seq.present(f, b)) continue;
      ++present;
      const BoxPose& box = seq.box(f, b);
      for (int j = 0; j < num_joints; ++j) {
        if (box.contains(joint_at(joints, f, j), cfg.containment_margin)) {
          ++hit;
          break;
        }
      }
    }
  }
  return present == 0 ? 1.0 : static_cast<double>(hit) / static_cast<double>(present);
}

double mean_center_dist(const Eigen::MatrixXd& joints, const BoxMotionSequence& seq) {
  check_shapes(joints, seq);
  const int num_joints = static_cast<int>(joints.cols() / 3);
  long present = 0;
  double total = 0.0;
  for (int f = 0; f < seq.num_frames(); ++f) {
    for (int b = 0; b < seq.num_boxes(); ++b) {
      if (!seq.present(f, b)) continue;
      ++present;
      const Vec3& c = seq.box(f, b).center();
      double best = std::numeric_limits<double>::infinity();
      for (int j = 0; j < num_joints; ++j) best = std::min(best, (joint_at(joints, f, j) - c).norm());
      total += best;
    }
  }
  return present == 0 ? 0.0 : total / static_cast<double>(present);
}

}  // namespace proxymotion
