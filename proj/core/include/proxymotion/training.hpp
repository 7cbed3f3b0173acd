#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "proxymotion/denoiser.hpp"
#include "proxymotion/synthesis.hpp"

namespace proxymotion {

struct TrainConfig {
  int steps_base = 2000;     // phase A
  int steps_control = 2000;  // phase B
  int batch = 8;
  double lr = 1e-3;
  double grad_clip = 1.0;
  int log_every = 50;
  std::uint64_t seed = 0;

  void validate() const;
};

struct LossPoint {
  int phase = 0;  // 0 = base, 1 = control
  int step = 0;
  double loss = 0.0;  // mean over the logging window
};

/// Initial and final losses are the means of the first and last logging windows.
struct TrainResult {
  std::vector<LossPoint> curve;
  double initial_loss_base = 0.0;
  double final_loss_base = 0.0;
  double initial_loss_control = 0.0;
  double final_loss_control = 0.0;
};

using TrainProgress = std::function<void(const LossPoint&)>;

/// Per-column mean and std of all frames of all motions. std is floored at
/// 1e-3 so constant coordinates stay finite.
void fit_normalization(MotionModel& model, const std::vector<DatasetItem>& data);

/// Adam with global-norm clipping over the parameters of one group.
class Adam {
 public:
  Adam(std::size_t size, double lr, double clip);
  /// Updates values where mask is true, using the store's gradients.
  void step(nn::ParamStore& store, const std::vector<bool>& mask);

 private:
  double lr_;
  double clip_;
  long t_ = 0;
  std::vector<double> m_;
  std::vector<double> v_;
};

/// Mean squared x0 error of one sample on the tape, normalized space.
double sample_loss(MotionModel& model, const NoiseSchedule& schedule, const DatasetItem& item, int t,
                   const Eigen::MatrixXd& noise, int label, bool with_boxes, Trainable mode, double grad_scale);

/// Phase A trains the base network on (motion, label) with label dropout.
/// Phase B freezes the base, copies it into the control branch and trains the
/// encoder and control branch on (boxes, motion, label). The model must be
/// initialized; normalization is fitted here.
TrainResult train_model(MotionModel& model, const std::vector<DatasetItem>& data, const TrainConfig& cfg,
                        const TrainProgress& progress = {});

/// Single phase, for callers that want to run them separately.
TrainResult train_phase(MotionModel& model, const std::vector<DatasetItem>& data, const TrainConfig& cfg, int phase,
                        const TrainProgress& progress = {});

}  // namespace proxymotion
