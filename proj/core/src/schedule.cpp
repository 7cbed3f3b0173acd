#include "proxymotion/schedule.hpp"

#include <cmath>
#include <string>

#include "proxymotion/errors.hpp"

namespace proxymotion {

void DiffusionConfig::validate() const {
  if (steps < 1) throw Error(ErrorKind::kInvariant, "diffusion steps must be >= 1");
  if (!(beta_start > 0.0 && beta_start <= beta_end && beta_end < 1.0)) {
    throw Error(ErrorKind::kInvariant, "betas must satisfy 0 < beta_start <= beta_end < 1");
  }
  if (d_model < 1 || layers < 1 || heads < 1 || frames < 1 || joints < 1) {
    throw Error(ErrorKind::kInvariant, "model dimensions must be positive");
  }
  if (d_model % heads != 0) throw Error(ErrorKind::kInvariant, "d_model must be divisible by heads");
  if (d_model % 2 != 0) throw Error(ErrorKind::kInvariant, "d_model must be even");
  if (!(cfg_scale >= 0.0)) throw Error(ErrorKind::kInvariant, "cfg_scale must be non-negative");
  if (!(label_drop >= 0.0 && label_drop <= 1.0)) throw Error(ErrorKind::kInvariant, "label_drop must lie in [0, 1]");
}

NoiseSchedule::NoiseSchedule(std::vector<double> betas) : betas_(std::move(betas)) {
  if (betas_.empty()) throw Error(ErrorKind::kInvariant, "empty beta schedule");
  double bar = 1.0;
  for (std::size_t i = 0; i < betas_.size(); ++i) {
    const double b = betas_[i];
    if (!(b > 0.0 && b < 1.0)) throw Error(ErrorKind::kInvariant, "beta outside (0, 1)");
    const double prev = bar;
    alphas_.push_back(1.0 - b);
    bar *= 1.0 - b;
    alpha_bars_.push_back(bar);
    posterior_variances_.push_back(b * (1.0 - prev) / (1.0 - bar));
  }
}

std::size_t NoiseSchedule::idx(int t) const {
  if (t < 1 || t > steps()) {
    throw Error(ErrorKind::kInvariant, "timestep " + std::to_string(t) + " outside [1, " + std::to_string(steps()) + "]");
  }
  return static_cast<std::size_t>(t - 1);
}

double NoiseSchedule::coef_x0(int t) const {
  return beta(t) * std::sqrt(alpha_bar_prev(t)) / (1.0 - alpha_bar(t));
}

double NoiseSchedule::coef_xt(int t) const {
  return (1.0 - alpha_bar_prev(t)) * std::sqrt(alpha(t)) / (1.0 - alpha_bar(t));
}

NoiseSchedule make_schedule(const DiffusionConfig& cfg) {
  cfg.validate();
  std::vector<double> betas(static_cast<std::size_t>(cfg.steps));
  for (int i = 0; i < cfg.steps; ++i) {
    const double frac = cfg.steps == 1 ? 0.0 : static_cast<double>(i) / (cfg.steps - 1);
    betas[static_cast<std::size_t>(i)] = cfg.beta_start + frac * (cfg.beta_end - cfg.beta_start);
  }
  return NoiseSchedule(std::move(betas));
}

Eigen::MatrixXd q_sample(const Eigen::MatrixXd& x0, int t, const Eigen::MatrixXd& noise, const NoiseSchedule& schedule) {
  if (x0.rows() != noise.rows() || x0.cols() != noise.cols()) {
    throw Error(ErrorKind::kShapeMismatch, "noise shape differs from x0");
  }
  const double ab = schedule.alpha_bar(t);
  return std::sqrt(ab) * x0 + std::sqrt(1.0 - ab) * noise;
}

}  // namespace proxymotion
