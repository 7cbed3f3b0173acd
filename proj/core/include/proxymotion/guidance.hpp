#pragma once

#include <Eigen/Core>

#include "proxymotion/types.hpp"

namespace proxymotion {

struct GuidanceConfig {
  double tau = 0.1;
  double containment_margin = 0.05;
  double step_scale = 0.3;  // rho
  int inner_steps = 5;      // K
  double active_fraction = 1.0;

  void validate() const;
};

/// Softmin over distances: w_j = exp(-d_j / tau) / sum_k exp(-d_k / tau).
Eigen::VectorXd soft_weights(const Eigen::VectorXd& distances, double tau);

// Joint tensors are F x 3J, frame-major, joint j of frame f at columns 3j..3j+2.

/// Mean over present (frame, box) pairs of the soft-weighted joint distance
/// to the box center. Zero when no box is present.
double guidance_loss(const Eigen::MatrixXd& joints, const BoxMotionSequence& seq, const GuidanceConfig& cfg);

/// Analytic gradient of guidance_loss, same shape as joints. A joint sitting
/// exactly on a box center contributes the zero subgradient for its distance.
Eigen::MatrixXd guidance_grad(const Eigen::MatrixXd& joints, const BoxMotionSequence& seq, const GuidanceConfig& cfg);

/// Loss and gradient in one pass.
double guidance_loss_grad(const Eigen::MatrixXd& joints, const BoxMotionSequence& seq, const GuidanceConfig& cfg,
                          Eigen::MatrixXd* grad);

/// Fraction of present (frame, box) pairs whose margin-inflated box holds at
/// least one joint. 1.0 when no box is present.
double containment_rate(const Eigen::MatrixXd& joints, const BoxMotionSequence& seq, const GuidanceConfig& cfg);

/// Mean over present (frame, box) pairs of the nearest joint's distance to
/// the box center.
double mean_center_dist(const Eigen::MatrixXd& joints, const BoxMotionSequence& seq);

}  // namespace proxymotion
