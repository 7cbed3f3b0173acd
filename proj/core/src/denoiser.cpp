#include "proxymotion/denoiser.hpp"

#include <cmath>

#include "proxymotion/errors.hpp"
#include "proxymotion/synthesis.hpp"

namespace proxymotion {

namespace {

bool starts_with(const std::string& s, const char* prefix) { return s.rfind(prefix, 0) == 0; }

}  // namespace

void ModelConfig::validate() const {
  diffusion.validate();
  if (encoder.hidden < 1 || encoder.heads < 1 || encoder.hidden % encoder.heads != 0) {
    throw Error(ErrorKind::kInvariant, "encoder hidden must be a positive multiple of heads");
  }
  if (!(fps > 0.0)) throw Error(ErrorKind::kInvariant, "fps must be positive");
  LabelVocabulary check(labels);
  (void)check;
}

Eigen::RowVectorXd sinusoidal_embedding(double position, int dim) {
  const int half = dim / 2;
  Eigen::RowVectorXd out = Eigen::RowVectorXd::Zero(dim);
  for (int i = 0; i < half; ++i) {
    const double w = std::exp(-std::log(10000.0) * i / half);
    out[i] = std::sin(position * w);
    out[half + i] = std::cos(position * w);
  }
  return out;
}

MotionModel::MotionModel(ModelConfig cfg)
    : cfg_((cfg.validate(), std::move(cfg))), encoder_(cfg_.encoder, params_, "enc.") {
  const int d = cfg_.diffusion.d_model;
  const int n = cfg_.features();
  in_w_ = params_.add("base.in.w", n, d);
  in_b_ = params_.add("base.in.b", 1, d);
  t_w1_ = params_.add("base.time.w1", d, d);
  t_b1_ = params_.add("base.time.b1", 1, d);
  t_w2_ = params_.add("base.time.w2", d, d);
  t_b2_ = params_.add("base.time.b2", 1, d);
  label_ = params_.add("base.label", vocabulary().num_classes(), d);
  for (int l = 0; l < cfg_.diffusion.layers; ++l) base_blocks_.push_back(register_block("base.block" + std::to_string(l) + "."));
  out_g_ = params_.add("base.out.ln.g", 1, d);
  out_b_ = params_.add("base.out.ln.b", 1, d);
  out_w_ = params_.add("base.out.w", d, n);
  out_bias_ = params_.add("base.out.b", 1, n);

  code_w_ = params_.add("ctrl.code.w", cfg_.encoder.hidden, d);
  code_b_ = params_.add("ctrl.code.b", 1, d);
  for (int l = 0; l < cfg_.diffusion.layers; ++l) {
    const std::string prefix = "ctrl.block" + std::to_string(l) + ".";
    ctrl_blocks_.push_back(register_block(prefix));
    zero_w_.push_back(params_.add("ctrl.zero" + std::to_string(l) + ".w", d, d));
    zero_b_.push_back(params_.add("ctrl.zero" + std::to_string(l) + ".b", 1, d));
  }
  mean_ = Eigen::RowVectorXd::Zero(n);
  std_ = Eigen::RowVectorXd::Ones(n);
}

MotionModel::Block MotionModel::register_block(const std::string& prefix) {
  const int d = cfg_.diffusion.d_model;
  Block b{};
  b.ln1_g = params_.add(prefix + "ln1.g", 1, d);
  b.ln1_b = params_.add(prefix + "ln1.b", 1, d);
  b.wq = params_.add(prefix + "attn.wq", d, d);
  b.bq = params_.add(prefix + "attn.bq", 1, d);
  b.wk = params_.add(prefix + "attn.wk", d, d);
  b.bk = params_.add(prefix + "attn.bk", 1, d);
  b.wv = params_.add(prefix + "attn.wv", d, d);
  b.bv = params_.add(prefix + "attn.bv", 1, d);
  b.wo = params_.add(prefix + "attn.wo", d, d);
  b.bo = params_.add(prefix + "attn.bo", 1, d);
  b.ln2_g = params_.add(prefix + "ln2.g", 1, d);
  b.ln2_b = params_.add(prefix + "ln2.b", 1, d);
  b.f_w1 = params_.add(prefix + "ffn.w1", d, 2 * d);
  b.f_b1 = params_.add(prefix + "ffn.b1", 1, 2 * d);
  b.f_w2 = params_.add(prefix + "ffn.w2", 2 * d, d);
  b.f_b2 = params_.add(prefix + "ffn.b2", 1, d);
  return b;
}

void MotionModel::init(std::uint64_t seed) {
  std::uint64_t k = 0;
  auto weight = [&](int id) { params_.init_uniform(id, derive_seed(seed, {1, ++k})); };
  weight(in_w_);
  weight(t_w1_);
  weight(t_w2_);
  weight(label_);
  for (const Block& b : base_blocks_) {
    for (int id : {b.wq, b.wk, b.wv, b.wo, b.f_w1, b.f_w2}) weight(id);
    for (int id : {b.bq, b.bk, b.bv, b.bo, b.f_b1, b.f_b2, b.ln1_b, b.ln2_b}) params_.fill(id, 0.0);
    params_.fill(b.ln1_g, 1.0);
    params_.fill(b.ln2_g, 1.0);
  }
  for (int id : {in_b_, t_b1_, t_b2_, out_b_, out_bias_}) params_.fill(id, 0.0);
  params_.fill(out_g_, 1.0);
  weight(out_w_);
  weight(code_w_);
  params_.fill(code_b_, 0.0);
  encoder_.init(params_, derive_seed(seed, {2}));
  copy_base_to_control();
  zero_control_residuals();
}

void MotionModel::copy_base_to_control() {
  for (std::size_t l = 0; l < base_blocks_.size(); ++l) {
    const Block& a = base_blocks_[l];
    const Block& c = ctrl_blocks_[l];
    const int from[] = {a.ln1_g, a.ln1_b, a.wq, a.bq, a.wk, a.bk, a.wv, a.bv, a.wo, a.bo,
                        a.ln2_g, a.ln2_b, a.f_w1, a.f_b1, a.f_w2, a.f_b2};
    const int to[] = {c.ln1_g, c.ln1_b, c.wq, c.bq, c.wk, c.bk, c.wv, c.bv, c.wo, c.bo,
                      c.ln2_g, c.ln2_b, c.f_w1, c.f_b1, c.f_w2, c.f_b2};
    for (std::size_t i = 0; i < std::size(from); ++i) params_.copy_block(from[i], to[i]);
  }
}

void MotionModel::zero_control_residuals() {
  for (int id : zero_w_) params_.fill(id, 0.0);
  for (int id : zero_b_) params_.fill(id, 0.0);
}

bool MotionModel::in_group(int block, Trainable group) const {
  const std::string& name = params_.block(block).name;
  switch (group) {
    case Trainable::kNone:
      return false;
    case Trainable::kBase:
      return starts_with(name, "base.");
    case Trainable::kControl:
      return starts_with(name, "ctrl.") || starts_with(name, "enc.");
  }
  return false;
}

void MotionModel::set_normalization(Eigen::RowVectorXd mean, Eigen::RowVectorXd stddev) {
  if (mean.size() != cfg_.features() || stddev.size() != cfg_.features()) {
    throw Error(ErrorKind::kShapeMismatch, "normalization size differs from 3J");
  }
  if (!mean.allFinite() || !stddev.allFinite() || (stddev.array() <= 0.0).any()) {
    throw Error(ErrorKind::kInvariant, "normalization must be finite with positive std");
  }
  mean_ = std::move(mean);
  std_ = std::move(stddev);
}

Eigen::MatrixXd MotionModel::normalize(const Eigen::MatrixXd& raw) const {
  return (raw.rowwise() - mean_).array().rowwise() / std_.array();
}

Eigen::MatrixXd MotionModel::denormalize(const Eigen::MatrixXd& norm) const {
  return (norm.array().rowwise() * std_.array()).matrix().rowwise() + mean_;
}

Eigen::MatrixXd MotionModel::encode(const BoxMotionSequence& seq) const { return encode_sequence(seq, encoder_, params_); }

nn::Var MotionModel::p(nn::Tape& tape, int block, bool trainable) const {
  if (trainable) return tape.param(const_cast<nn::ParamStore&>(params_), block, true);
  return tape.param(params_, block);
}

nn::Var MotionModel::run_block(nn::Tape& tape, nn::Var h, const Block& b, bool tr) const {
  const nn::Var a_in = nn::layer_norm(tape, h, p(tape, b.ln1_g, tr), p(tape, b.ln1_b, tr));
  const nn::AttentionWeights w{p(tape, b.wq, tr), p(tape, b.bq, tr), p(tape, b.wk, tr), p(tape, b.bk, tr),
                               p(tape, b.wv, tr), p(tape, b.bv, tr), p(tape, b.wo, tr), p(tape, b.bo, tr)};
  h = nn::add(tape, h, nn::self_attention(tape, a_in, w, cfg_.diffusion.heads));
  const nn::Var f_in = nn::layer_norm(tape, h, p(tape, b.ln2_g, tr), p(tape, b.ln2_b, tr));
  const nn::Var mid = nn::silu(tape, nn::linear(tape, f_in, p(tape, b.f_w1, tr), p(tape, b.f_b1, tr)));
  return nn::add(tape, h, nn::linear(tape, mid, p(tape, b.f_w2, tr), p(tape, b.f_b2, tr)));
}

nn::Var MotionModel::forward(nn::Tape& tape, const nn::Matrix& x_t, int t, int label, std::optional<nn::Var> codes,
                             Trainable mode) {
  const int d = cfg_.diffusion.d_model;
  const int frames = cfg_.diffusion.frames;
  if (x_t.rows() != frames || x_t.cols() != cfg_.features()) {
    throw Error(ErrorKind::kShapeMismatch, "x_t must be " + std::to_string(frames) + " x " +
                                               std::to_string(cfg_.features()));
  }
  if (label < 0 || label >= vocabulary().num_classes()) throw Error(ErrorKind::kUnknownLabel, "label index out of range");
  if (t < 1 || t > cfg_.diffusion.steps) throw Error(ErrorKind::kInvariant, "timestep out of range");
  if (codes && (tape.value(*codes).rows() != frames || tape.value(*codes).cols() != cfg_.encoder.hidden)) {
    throw Error(ErrorKind::kShapeMismatch, "frame codes must be F x h");
  }
  const bool base_tr = mode == Trainable::kBase;
  const bool ctrl_tr = mode == Trainable::kControl;

  nn::Matrix pos(frames, d);
  for (int f = 0; f < frames; ++f) pos.row(f) = sinusoidal_embedding(f, d);
  const nn::Var t_emb = tape.constant(sinusoidal_embedding(t, d));
  const nn::Var t_hidden = nn::silu(tape, nn::linear(tape, t_emb, p(tape, t_w1_, base_tr), p(tape, t_b1_, base_tr)));
  const nn::Var t_code = nn::linear(tape, t_hidden, p(tape, t_w2_, base_tr), p(tape, t_b2_, base_tr));
  const nn::Var label_row = nn::slice_rows(tape, p(tape, label_, base_tr), label, 1);
  const nn::Var cond = nn::add(tape, t_code, label_row);

  const nn::Var x = tape.constant(x_t);
  nn::Var h = nn::linear(tape, x, p(tape, in_w_, base_tr), p(tape, in_b_, base_tr));
  h = nn::add_row(tape, nn::add(tape, h, tape.constant(pos)), cond);

  std::optional<nn::Var> c;
  if (codes) c = nn::add(tape, h, nn::linear(tape, *codes, p(tape, code_w_, ctrl_tr), p(tape, code_b_, ctrl_tr)));
  for (std::size_t l = 0; l < base_blocks_.size(); ++l) {
    h = run_block(tape, h, base_blocks_[l], base_tr);
    if (c) {
      c = run_block(tape, *c, ctrl_blocks_[l], ctrl_tr);
      h = nn::add(tape, h, nn::linear(tape, *c, p(tape, zero_w_[l], ctrl_tr), p(tape, zero_b_[l], ctrl_tr)));
    }
  }
  h = nn::layer_norm(tape, h, p(tape, out_g_, base_tr), p(tape, out_b_, base_tr));
  return nn::linear(tape, h, p(tape, out_w_, base_tr), p(tape, out_bias_, base_tr));
}

Eigen::MatrixXd MotionModel::denoise(const Eigen::MatrixXd& x_t, int t, int label, const Eigen::MatrixXd* codes) const {
  nn::Tape tape;
  std::optional<nn::Var> code_var;
  if (codes) code_var = tape.constant(*codes);
  // A frozen pass never writes to params_.
  auto& self = const_cast<MotionModel&>(*this);
  return tape.value(self.forward(tape, x_t, t, label, code_var, Trainable::kNone));
}

}  // namespace proxymotion
