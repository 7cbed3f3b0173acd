#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "proxymotion/denoiser.hpp"
#include "proxymotion/guidance.hpp"

namespace proxymotion {

/// Diagnostics of one sampling run. A motion whose lowest joint falls more
/// than the ground tolerance below y = 0 is lifted so that joint sits at 0;
/// ground_shift records the lift.
struct SampleTrace {
  double final_guidance_loss = 0.0;
  int guided_steps = 0;
  double ground_shift = 0.0;
};

/// Classifier-free combination: uncond + scale * (cond - uncond); returns
/// cond itself when scale == 1.
Eigen::MatrixXd cfg_combine(const Eigen::MatrixXd& cond, const Eigen::MatrixXd& uncond, double scale);

/// Ancestral DDPM sampling from x_T ~ N(0, I).
///
/// With a box sequence the frame codes feed the control branch, and inside
/// the final active_fraction of steps the predicted x0 is moved by K steps
/// x0 <- x0 - rho * (1 - alpha_bar_t) * N_present * grad L in joint space
/// before the posterior mean is formed.
SkeletonMotion sample_motion(const MotionModel& model, const NoiseSchedule& schedule,
                             const std::optional<std::string>& label, const BoxMotionSequence* seq,
                             const GuidanceConfig& gcfg, std::uint64_t seed, SampleTrace* trace = nullptr);

}  // namespace proxymotion
