#pragma once

#include <Eigen/Core>

#include <vector>

namespace proxymotion {

struct DiffusionConfig {
  int steps = 1000;
  double beta_start = 1e-4;
  double beta_end = 0.02;
  int d_model = 128;
  int layers = 4;
  int heads = 4;
  int frames = 60;
  int joints = 22;
  double cfg_scale = 2.5;
  double label_drop = 0.1;

  void validate() const;
};

/// Linear-beta DDPM bookkeeping. Timesteps are 1-based: t = 1 .. T.
class NoiseSchedule {
 public:
  NoiseSchedule() = default;
  explicit NoiseSchedule(std::vector<double> betas);

  int steps() const { return static_cast<int>(betas_.size()); }
  double beta(int t) const { return betas_.at(idx(t)); }
  double alpha(int t) const { return alphas_.at(idx(t)); }
  double alpha_bar(int t) const { return alpha_bars_.at(idx(t)); }
  /// alpha_bar_{t-1}, with alpha_bar_0 = 1.
  double alpha_bar_prev(int t) const { return t == 1 ? 1.0 : alpha_bar(t - 1); }
  double posterior_variance(int t) const { return posterior_variances_.at(idx(t)); }
  /// Posterior mean of x_{t-1} is coef_x0(t) * x0 + coef_xt(t) * x_t.
  double coef_x0(int t) const;
  double coef_xt(int t) const;

  const std::vector<double>& betas() const { return betas_; }
  const std::vector<double>& alphas() const { return alphas_; }
  const std::vector<double>& alpha_bars() const { return alpha_bars_; }
  const std::vector<double>& posterior_variances() const { return posterior_variances_; }

 private:
  std::size_t idx(int t) const;

  std::vector<double> betas_;
  std::vector<double> alphas_;
  std::vector<double> alpha_bars_;
  std::vector<double> posterior_variances_;
};

NoiseSchedule make_schedule(const DiffusionConfig& cfg);

/// x_t = sqrt(alpha_bar_t) x0 + sqrt(1 - alpha_bar_t) noise.
Eigen::MatrixXd q_sample(const Eigen::MatrixXd& x0, int t, const Eigen::MatrixXd& noise, const NoiseSchedule& schedule);

}  // namespace proxymotion
