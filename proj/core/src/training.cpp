#include "proxymotion/training.hpp"

#include <cmath>
#include <random>

#include "proxymotion/errors.hpp"

namespace proxymotion {

namespace {

constexpr double kMinStd = 1e-3;

void check_item(const MotionModel& model, const DatasetItem& item) {
  const DiffusionConfig& d = model.config().diffusion;
  if (item.motion.num_frames() != d.frames || item.motion.num_joints() != d.joints) {
    throw Error(ErrorKind::kShapeMismatch, "dataset motion is " + std::to_string(item.motion.num_frames()) + " x " +
                                               std::to_string(item.motion.num_joints()) + ", model expects " +
                                               std::to_string(d.frames) + " x " + std::to_string(d.joints));
  }
  if (item.boxes.num_frames() != d.frames) {
    throw Error(ErrorKind::kShapeMismatch, "dataset box sequence frame count differs from model frames");
  }
}

Eigen::MatrixXd gaussian(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols) {
  std::normal_distribution<double> n01(0.0, 1.0);
  Eigen::MatrixXd out(rows, cols);
  // Row-major fill so the draw order does not depend on Eigen's storage.
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) out(r, c) = n01(rng);
  }
  return out;
}

}  // namespace

void TrainConfig::validate() const {
  if (steps_base < 0 || steps_control < 0) throw Error(ErrorKind::kInvariant, "training steps must be non-negative");
  if (batch < 1) throw Error(ErrorKind::kInvariant, "batch must be >= 1");
  if (!(lr > 0.0)) throw Error(ErrorKind::kInvariant, "lr must be positive");
  if (!(grad_clip > 0.0)) throw Error(ErrorKind::kInvariant, "grad_clip must be positive");
  if (log_every < 1) throw Error(ErrorKind::kInvariant, "log_every must be >= 1");
}

void fit_normalization(MotionModel& model, const std::vector<DatasetItem>& data) {
  if (data.empty()) throw Error(ErrorKind::kEmptyDataset, "cannot fit normalization on an empty dataset");
  const int n = model.config().features();
  Eigen::RowVectorXd sum = Eigen::RowVectorXd::Zero(n);
  Eigen::RowVectorXd sq = Eigen::RowVectorXd::Zero(n);
  double count = 0.0;
  for (const DatasetItem& item : data) {
    check_item(model, item);
    sum += item.motion.joints().colwise().sum();
    count += static_cast<double>(item.motion.num_frames());
  }
  const Eigen::RowVectorXd mean = sum / count;
  for (const DatasetItem& item : data) {
    sq += (item.motion.joints().rowwise() - mean).array().square().matrix().colwise().sum();
  }
  Eigen::RowVectorXd stddev = (sq / count).array().sqrt().max(kMinStd).matrix();
  model.set_normalization(mean, stddev);
}

Adam::Adam(std::size_t size, double lr, double clip) : lr_(lr), clip_(clip), m_(size, 0.0), v_(size, 0.0) {}

void Adam::step(nn::ParamStore& store, const std::vector<bool>& mask) {
  constexpr double b1 = 0.9;
  constexpr double b2 = 0.999;
  constexpr double eps = 1e-8;
  auto values = store.values();
  auto grads = store.grads();
  double norm2 = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (mask[i]) norm2 += grads[i] * grads[i];
  }
  const double norm = std::sqrt(norm2);
  const double scale = norm > clip_ ? clip_ / norm : 1.0;
  ++t_;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!mask[i]) continue;
    const double g = grads[i] * scale;
    m_[i] = b1 * m_[i] + (1.0 - b1) * g;
    v_[i] = b2 * v_[i] + (1.0 - b2) * g * g;
    values[i] -= lr_ * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + eps);
  }
}

double sample_loss(MotionModel& model, const NoiseSchedule& schedule, const DatasetItem& item, int t,
                   const Eigen::MatrixXd& noise, int label, bool with_boxes, Trainable mode, double grad_scale) {
  check_item(model, item);
  const Eigen::MatrixXd x0 = model.normalize(item.motion.joints());
  const nn::Matrix x_t = q_sample(x0, t, noise, schedule);
  nn::Tape tape;
  std::optional<nn::Var> codes;
  if (with_boxes) {
    codes = model.encoder().forward(tape, model.params(), item.boxes, mode == Trainable::kControl);
  }
  const nn::Var pred = model.forward(tape, x_t, t, label, codes, mode);
  const nn::Var loss = nn::mse(tape, pred, nn::Matrix(x0));
  if (mode != Trainable::kNone) tape.backward(loss, nn::Matrix::Constant(1, 1, grad_scale));
  return tape.value(loss)(0, 0);
}

TrainResult train_phase(MotionModel& model, const std::vector<DatasetItem>& data, const TrainConfig& cfg, int phase,
                        const TrainProgress& progress) {
  cfg.validate();
  if (data.empty()) throw Error(ErrorKind::kEmptyDataset, "training dataset is empty");
  if (phase != 0 && phase != 1) throw Error(ErrorKind::kInvariant, "phase must be 0 or 1");
  for (const DatasetItem& item : data) check_item(model, item);

  const DiffusionConfig& dc = model.config().diffusion;
  const NoiseSchedule schedule = make_schedule(dc);
  const LabelVocabulary vocab = model.vocabulary();
  const Trainable mode = phase == 0 ? Trainable::kBase : Trainable::kControl;
  const int steps = phase == 0 ? cfg.steps_base : cfg.steps_control;

  nn::ParamStore& store = model.params();
  std::vector<bool> mask(store.size(), false);
  for (std::size_t b = 0; b < store.blocks().size(); ++b) {
    if (!model.in_group(static_cast<int>(b), mode)) continue;
    const auto& blk = store.blocks()[b];
    std::fill_n(mask.begin() + static_cast<std::ptrdiff_t>(blk.offset), blk.size(), true);
  }
  Adam adam(store.size(), cfg.lr, cfg.grad_clip);
  std::mt19937_64 rng(derive_seed(cfg.seed, {static_cast<std::uint64_t>(phase) + 101}));
  std::uniform_int_distribution<std::size_t> pick(0, data.size() - 1);
  std::uniform_int_distribution<int> pick_t(1, dc.steps);
  std::uniform_real_distribution<double> u01(0.0, 1.0);

  TrainResult result;
  double window = 0.0;
  int window_n = 0;
  for (int step = 1; step <= steps; ++step) {
    store.zero_grad();
    double batch_loss = 0.0;
    for (int i = 0; i < cfg.batch; ++i) {
      const DatasetItem& item = data[pick(rng)];
      const int t = pick_t(rng);
      const Eigen::MatrixXd noise = gaussian(rng, dc.frames, model.config().features());
      int label = 0;
      if (phase == 0) {
        const bool drop = u01(rng) < dc.label_drop;
        label = drop ? 0 : vocab.index_of(item.motion.label());
      } else {
        label = vocab.index_of(item.label);
      }
      batch_loss += sample_loss(model, schedule, item, t, noise, label, phase == 1, mode, 1.0 / cfg.batch);
    }
    batch_loss /= cfg.batch;
    adam.step(store, mask);

    window += batch_loss;
    ++window_n;
    if (step % cfg.log_every == 0 || step == steps) {
      LossPoint point{phase, step, window / window_n};
      result.curve.push_back(point);
      if (progress) progress(point);
      if (result.curve.size() == 1) (phase == 0 ? result.initial_loss_base : result.initial_loss_control) = point.loss;
      (phase == 0 ? result.final_loss_base : result.final_loss_control) = point.loss;
      window = 0.0;
      window_n = 0;
    }
  }
  store.zero_grad();
  return result;
}

TrainResult train_model(MotionModel& model, const std::vector<DatasetItem>& data, const TrainConfig& cfg,
                        const TrainProgress& progress) {
  cfg.validate();
  if (data.empty()) throw Error(ErrorKind::kEmptyDataset, "training dataset is empty");
  fit_normalization(model, data);
  TrainResult a = train_phase(model, data, cfg, 0, progress);
  model.copy_base_to_control();
  model.zero_control_residuals();
  TrainResult b = train_phase(model, data, cfg, 1, progress);
  TrainResult out;
  out.curve = a.curve;
  out.curve.insert(out.curve.end(), b.curve.begin(), b.curve.end());
  out.initial_loss_base = a.initial_loss_base;
  out.final_loss_base = a.final_loss_base;
  out.initial_loss_control = b.initial_loss_control;
  out.final_loss_control = b.final_loss_control;
  return out;
}

}  // namespace proxymotion
