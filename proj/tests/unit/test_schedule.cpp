#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "proxymotion/errors.hpp"
#include "proxymotion/schedule.hpp"

using namespace proxymotion;

namespace {

DiffusionConfig with_steps(int steps, double b0, double b1) {
  DiffusionConfig c;
  c.steps = steps;
  c.beta_start = b0;
  c.beta_end = b1;
  return c;
}

}  // namespace

TEST(Schedule, SingleStep) {
  const NoiseSchedule s = make_schedule(with_steps(1, 0.01, 0.01));
  ASSERT_EQ(s.steps(), 1);
  EXPECT_DOUBLE_EQ(s.alpha_bar(1), 0.99);
  EXPECT_EQ(s.alpha_bar_prev(1), 1.0);
  EXPECT_EQ(s.posterior_variance(1), 0.0);
}

TEST(Schedule, MatchesExtendedPrecisionProduct) {
  const DiffusionConfig cfg = with_steps(100, 1e-4, 0.02);
  const NoiseSchedule s = make_schedule(cfg);
  long double prod = 1.0L;
  for (int t = 1; t <= 100; ++t) {
    const long double beta =
        static_cast<long double>(cfg.beta_start) +
        (static_cast<long double>(cfg.beta_end) - cfg.beta_start) * (t - 1) / 99.0L;
    prod *= 1.0L - beta;
    EXPECT_NEAR(s.beta(t), static_cast<double>(beta), 1e-15);
    EXPECT_NEAR(s.alpha_bar(t), static_cast<double>(prod), 1e-12);
    if (t > 1) EXPECT_LT(s.alpha_bar(t), s.alpha_bar(t - 1));
    EXPECT_GT(s.alpha_bar(t), 0.0);
    EXPECT_LT(s.alpha_bar(t), 1.0);
  }
}

TEST(Schedule, EqualEndpointsClosedForm) {
  const NoiseSchedule s = make_schedule(with_steps(50, 0.03, 0.03));
  for (int t = 1; t <= 50; ++t) {
    EXPECT_EQ(s.beta(t), 0.03);
    EXPECT_NEAR(s.alpha_bar(t), std::pow(0.97, t), 1e-13);
  }
}

TEST(Schedule, PosteriorCoefficients) {
  const NoiseSchedule s = make_schedule(with_steps(100, 1e-3, 0.2));
  for (int t : {1, 2, 50, 100}) {
    const double ab = s.alpha_bar(t), abp = t == 1 ? 1.0 : s.alpha_bar(t - 1), b = s.beta(t);
    EXPECT_NEAR(s.coef_x0(t), b * std::sqrt(abp) / (1 - ab), 1e-14);
    EXPECT_NEAR(s.coef_xt(t), (1 - abp) * std::sqrt(1 - b) / (1 - ab), 1e-14);
    EXPECT_NEAR(s.posterior_variance(t), b * (1 - abp) / (1 - ab), 1e-14);
  }
}

TEST(Schedule, RejectsOutOfRangeTimestep) {
  const NoiseSchedule s = make_schedule(with_steps(10, 1e-3, 0.02));
  EXPECT_THROW(s.beta(0), Error);
  EXPECT_THROW(s.alpha_bar(11), Error);
}

TEST(Schedule, RejectsBadConfig) {
  EXPECT_THROW(make_schedule(with_steps(0, 1e-3, 0.02)), Error);
  EXPECT_THROW(make_schedule(with_steps(10, 0.02, 1e-3)), Error);
  EXPECT_THROW(make_schedule(with_steps(10, 0.0, 0.02)), Error);
  EXPECT_THROW(make_schedule(with_steps(10, 1e-3, 1.0)), Error);
}

TEST(QSample, ZeroNoiseScalesSignal) {
  const NoiseSchedule s = make_schedule(with_steps(100, 1e-4, 0.02));
  const Eigen::MatrixXd x0 = Eigen::MatrixXd::Random(4, 6);
  const Eigen::MatrixXd xt = q_sample(x0, 37, Eigen::MatrixXd::Zero(4, 6), s);
  EXPECT_EQ(xt, std::sqrt(s.alpha_bar(37)) * x0);
}

TEST(QSample, FirstStepStaysClose) {
  const NoiseSchedule s = make_schedule(with_steps(100, 1e-4, 0.02));
  std::mt19937_64 rng(3);
  Eigen::MatrixXd x0(5, 6), noise(5, 6);
  for (Eigen::Index i = 0; i < x0.size(); ++i) {
    x0.data()[i] = testsupport::gaussian(rng);
    noise.data()[i] = testsupport::gaussian(rng);
  }
  const Eigen::MatrixXd xt = q_sample(x0, 1, noise, s);
  EXPECT_LE((xt - x0).norm(), std::sqrt(1e-4) * noise.norm() + (1 - std::sqrt(1 - 1e-4)) * x0.norm() + 1e-15);
}

TEST(QSample, HandComputedCombination) {
  const NoiseSchedule s = make_schedule(with_steps(100, 1e-3, 0.2));
  Eigen::MatrixXd x0(1, 3), noise(1, 3);
  x0 << 0.5, -1.0, 2.0;
  noise << 0.3, 0.1, -0.7;
  const int t = 20;
  const double a = std::sqrt(s.alpha_bar(t)), b = std::sqrt(1.0 - s.alpha_bar(t));
  const Eigen::MatrixXd xt = q_sample(x0, t, noise, s);
  for (int k = 0; k < 3; ++k) EXPECT_NEAR(xt(0, k), a * x0(0, k) + b * noise(0, k), 1e-12);
}

TEST(QSample, ShapeMismatch) {
  const NoiseSchedule s = make_schedule(with_steps(10, 1e-3, 0.02));
  EXPECT_THROW(q_sample(Eigen::MatrixXd::Zero(2, 3), 1, Eigen::MatrixXd::Zero(3, 3), s), Error);
}

TEST(QSample, TerminalMarginalIsStandardNormal) {
  // With the desk schedule alpha_bar_T is tiny, so x_T of unit-scale data is
  // close to N(0, 1).
  const NoiseSchedule s = make_schedule(with_steps(100, 1e-3, 0.2));
  std::mt19937_64 rng(4);
  const int n = 10000;
  Eigen::MatrixXd x0(n, 1), noise(n, 1);
  for (int i = 0; i < n; ++i) {
    x0(i, 0) = testsupport::gaussian(rng);
    noise(i, 0) = testsupport::gaussian(rng);
  }
  const Eigen::MatrixXd xt = q_sample(x0, 100, noise, s);
  const double mean = xt.mean();
  const double var = (xt.array() - mean).square().mean();
  EXPECT_LT(std::abs(mean), 0.05);
  EXPECT_NEAR(var, 1.0, 0.05);
}
