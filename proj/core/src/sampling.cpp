#include "proxymotion/sampling.hpp"

#include <cmath>
#include <limits>
#include <random>

#include "proxymotion/errors.hpp"

namespace proxymotion {

namespace {

long count_present(const BoxMotionSequence& seq) {
  long n = 0;
  for (int f = 0; f < seq.num_frames(); ++f) {
    for (int b = 0; b < seq.num_boxes(); ++b) n += seq.present(f, b) ? 1 : 0;
  }
  return n;
}

void fill_gaussian(std::mt19937_64& rng, Eigen::MatrixXd& m) {
  std::normal_distribution<double> n01(0.0, 1.0);
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = n01(rng);
  }
}

}  // namespace

Eigen::MatrixXd cfg_combine(const Eigen::MatrixXd& cond, const Eigen::MatrixXd& uncond, double scale) {
  if (scale == 1.0) return cond;
  return uncond + scale * (cond - uncond);
}

SkeletonMotion sample_motion(const MotionModel& model, const NoiseSchedule& schedule,
                             const std::optional<std::string>& label, const BoxMotionSequence* seq,
                             const GuidanceConfig& gcfg, std::uint64_t seed, SampleTrace* trace) {
  gcfg.validate();
  const ModelConfig& mc = model.config();
  const int frames = mc.diffusion.frames;
  if (schedule.steps() != mc.diffusion.steps) {
    throw Error(ErrorKind::kShapeMismatch, "schedule length differs from the model's diffusion steps");
  }
  if (seq && seq->num_frames() != frames) {
    throw Error(ErrorKind::kShapeMismatch, "box sequence has " + std::to_string(seq->num_frames()) +
                                               " frames, model generates " + std::to_string(frames));
  }
  const int label_index = model.vocabulary().index_of(label);

  std::optional<Eigen::MatrixXd> codes;
  if (seq) codes = model.encode(*seq);
  const Eigen::MatrixXd* code_ptr = codes ? &*codes : nullptr;

  const bool guide = seq && gcfg.inner_steps > 0 && gcfg.step_scale > 0.0;
  const long present = seq ? count_present(*seq) : 0;
  const int T = schedule.steps();
  const int active_from = static_cast<int>(std::ceil(gcfg.active_fraction * T));  // t <= active_from

  std::mt19937_64 rng(seed);
  Eigen::MatrixXd x(frames, mc.features());
  fill_gaussian(rng, x);
  Eigen::MatrixXd z(frames, mc.features());
  SampleTrace local;

  for (int t = T; t >= 1; --t) {
    Eigen::MatrixXd x0 = model.denoise(x, t, label_index, code_ptr);
    if (label_index != 0) {
      const Eigen::MatrixXd uncond = model.denoise(x, t, 0, code_ptr);
      x0 = cfg_combine(x0, uncond, mc.diffusion.cfg_scale);
    }
    if (guide && t <= active_from && present > 0) {
      Eigen::MatrixXd raw = model.denormalize(x0);
      const double step = gcfg.step_scale * (1.0 - schedule.alpha_bar(t)) * static_cast<double>(present);
      for (int k = 0; k < gcfg.inner_steps; ++k) raw -= step * guidance_grad(raw, *seq, gcfg);
      x0 = model.normalize(raw);
      ++local.guided_steps;
    }
    x = schedule.coef_x0(t) * x0 + schedule.coef_xt(t) * x;
    if (t > 1) {
      fill_gaussian(rng, z);
      x += std::sqrt(schedule.posterior_variance(t)) * z;
    }
  }

  Eigen::MatrixXd joints = model.denormalize(x);
  double min_y = std::numeric_limits<double>::infinity();
  for (Eigen::Index c = 1; c < joints.cols(); c += 3) min_y = std::min(min_y, joints.col(c).minCoeff());
  if (min_y < -kGroundTolerance) {
    for (Eigen::Index c = 1; c < joints.cols(); c += 3) joints.col(c).array() -= min_y;
    local.ground_shift = -min_y;
  }
  if (seq) local.final_guidance_loss = guidance_loss(joints, *seq, gcfg);
  if (trace) *trace = local;
  return SkeletonMotion(mc.fps, mc.skeleton, std::move(joints), label);
}

}  // namespace proxymotion
