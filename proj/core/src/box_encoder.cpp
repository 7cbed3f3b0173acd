#include "proxymotion/box_encoder.hpp"

#include "proxymotion/errors.hpp"
#include "proxymotion/synthesis.hpp"

namespace proxymotion {

namespace {

BoxEncoder::Blocks register_blocks(const EncoderConfig& cfg, nn::ParamStore& store, const std::string& prefix) {
  const int h = cfg.hidden;
  BoxEncoder::Blocks b{};
  b.w1 = store.add(prefix + "vertex.w1", 3, h);
  b.b1 = store.add(prefix + "vertex.b1", 1, h);
  b.w2 = store.add(prefix + "vertex.w2", h, h);
  b.b2 = store.add(prefix + "vertex.b2", 1, h);
  b.wq = store.add(prefix + "attn.wq", h, h);
  b.bq = store.add(prefix + "attn.bq", 1, h);
  b.wk = store.add(prefix + "attn.wk", h, h);
  b.bk = store.add(prefix + "attn.bk", 1, h);
  b.wv = store.add(prefix + "attn.wv", h, h);
  b.bv = store.add(prefix + "attn.bv", 1, h);
  b.wo = store.add(prefix + "attn.wo", h, h);
  b.bo = store.add(prefix + "attn.bo", 1, h);
  return b;
}

BoxEncoder::Blocks bind_blocks(const nn::ParamStore& store, const std::string& prefix) {
  BoxEncoder::Blocks b{};
  b.w1 = store.id(prefix + "vertex.w1");
  b.b1 = store.id(prefix + "vertex.b1");
  b.w2 = store.id(prefix + "vertex.w2");
  b.b2 = store.id(prefix + "vertex.b2");
  b.wq = store.id(prefix + "attn.wq");
  b.bq = store.id(prefix + "attn.bq");
  b.wk = store.id(prefix + "attn.wk");
  b.bk = store.id(prefix + "attn.bk");
  b.wv = store.id(prefix + "attn.wv");
  b.bv = store.id(prefix + "attn.bv");
  b.wo = store.id(prefix + "attn.wo");
  b.bo = store.id(prefix + "attn.bo");
  return b;
}

std::vector<std::vector<BoxPose>> present_boxes(const BoxMotionSequence& seq) {
  std::vector<std::vector<BoxPose>> frames;
  frames.reserve(seq.frames().size());
  for (const auto& frame : seq.frames()) {
    std::vector<BoxPose> boxes;
    for (const auto& slot : frame) {
      if (slot) boxes.push_back(*slot);
    }
    frames.push_back(std::move(boxes));
  }
  return frames;
}

}  // namespace

BoxEncoder::BoxEncoder(EncoderConfig cfg, nn::ParamStore& store, const std::string& prefix)
    : cfg_(cfg) {
  if (cfg.hidden < 1 || cfg.heads < 1 || cfg.hidden % cfg.heads != 0) {
    throw Error(ErrorKind::kShapeMismatch, "encoder hidden width must be a positive multiple of heads");
  }
  blocks_ = register_blocks(cfg, store, prefix);
}

BoxEncoder::BoxEncoder(EncoderConfig cfg, const nn::ParamStore& store, const std::string& prefix)
    : cfg_(cfg), blocks_(bind_blocks(store, prefix)) {
  if (store.block(blocks_.w1).cols != cfg.hidden) {
    throw Error(ErrorKind::kShapeMismatch, "stored encoder width differs from config");
  }
}

void BoxEncoder::init(nn::ParamStore& store, std::uint64_t seed) const {
  const int weights[] = {blocks_.w1, blocks_.w2, blocks_.wq, blocks_.wk, blocks_.wv, blocks_.wo};
  std::uint64_t k = 0;
  for (int w : weights) store.init_uniform(w, derive_seed(seed, {++k}));
  for (int b : {blocks_.b1, blocks_.b2, blocks_.bq, blocks_.bk, blocks_.bv, blocks_.bo}) store.fill(b, 0.0);
}

nn::Var BoxEncoder::param(nn::Tape& tape, const nn::ParamStore& store, nn::ParamStore* grad_target, int block) const {
  return grad_target ? tape.param(*grad_target, block, true) : tape.param(store, block);
}

nn::Var BoxEncoder::corner_codes(nn::Tape& tape, const nn::ParamStore& store, nn::ParamStore* grad_target,
                                 const nn::Matrix& corners) const {
  const nn::Var x = tape.constant(corners);
  const nn::Var hidden = nn::silu(tape, nn::linear(tape, x, param(tape, store, grad_target, blocks_.w1),
                                                   param(tape, store, grad_target, blocks_.b1)));
  const nn::Var features = nn::linear(tape, hidden, param(tape, store, grad_target, blocks_.w2),
                                      param(tape, store, grad_target, blocks_.b2));
  return nn::pool_mean_max(tape, features, 8);
}

nn::Var BoxEncoder::frames_impl(nn::Tape& tape, const nn::ParamStore& store, nn::ParamStore* grad_target,
                                const std::vector<std::vector<BoxPose>>& frames) const {
  if (frames.empty()) throw Error(ErrorKind::kShapeMismatch, "no frames to encode");
  std::size_t total = 0;
  for (const auto& f : frames) total += f.size();
  const nn::Var zero = tape.constant(nn::Matrix::Zero(1, cfg_.hidden));
  if (total == 0) {
    return nn::concat_rows(tape, std::vector<nn::Var>(frames.size(), zero));
  }

  nn::Matrix corners(static_cast<Eigen::Index>(8 * total), 3);
  Eigen::Index row = 0;
  for (const auto& f : frames) {
    for (const BoxPose& box : f) {
      for (const Vec3& v : box_vertices(box)) corners.row(row++) = v.transpose();
    }
  }
  const nn::Var codes = corner_codes(tape, store, grad_target, corners);

  nn::AttentionWeights w{param(tape, store, grad_target, blocks_.wq), param(tape, store, grad_target, blocks_.bq),
                         param(tape, store, grad_target, blocks_.wk), param(tape, store, grad_target, blocks_.bk),
                         param(tape, store, grad_target, blocks_.wv), param(tape, store, grad_target, blocks_.bv),
                         param(tape, store, grad_target, blocks_.wo), param(tape, store, grad_target, blocks_.bo)};
  std::vector<nn::Var> rows;
  rows.reserve(frames.size());
  int start = 0;
  for (const auto& f : frames) {
    const int n = static_cast<int>(f.size());
    if (n == 0) {
      rows.push_back(zero);
      continue;
    }
    const nn::Var boxes = (n == static_cast<int>(total)) ? codes : nn::slice_rows(tape, codes, start, n);
    const nn::Var attended = nn::self_attention(tape, boxes, w, cfg_.heads);
    rows.push_back(nn::pool_mean_max(tape, attended, n));
    start += n;
  }
  return rows.size() == 1 ? rows.front() : nn::concat_rows(tape, rows);
}

nn::Var BoxEncoder::forward(nn::Tape& tape, nn::ParamStore& store, const BoxMotionSequence& seq, bool trainable) const {
  return frames_impl(tape, store, trainable ? &store : nullptr, present_boxes(seq));
}

nn::Var BoxEncoder::forward(nn::Tape& tape, const nn::ParamStore& store, const BoxMotionSequence& seq) const {
  return frames_impl(tape, store, nullptr, present_boxes(seq));
}

nn::Var BoxEncoder::forward_frames(nn::Tape& tape, nn::ParamStore& store,
                                   const std::vector<std::vector<BoxPose>>& frames, bool trainable) const {
  return frames_impl(tape, store, trainable ? &store : nullptr, frames);
}

nn::Var BoxEncoder::forward_frames(nn::Tape& tape, const nn::ParamStore& store,
                                   const std::vector<std::vector<BoxPose>>& frames) const {
  return frames_impl(tape, store, nullptr, frames);
}

nn::Var BoxEncoder::forward_boxes(nn::Tape& tape, nn::ParamStore& store, const std::vector<BoxPose>& boxes,
                                  bool trainable) const {
  if (boxes.empty()) throw Error(ErrorKind::kShapeMismatch, "no boxes to encode");
  nn::Matrix corners(static_cast<Eigen::Index>(8 * boxes.size()), 3);
  Eigen::Index row = 0;
  for (const BoxPose& box : boxes) {
    for (const Vec3& v : box_vertices(box)) corners.row(row++) = v.transpose();
  }
  return corner_codes(tape, store, trainable ? &store : nullptr, corners);
}

std::array<Vec3, 8> box_vertices(const BoxPose& box) {
  const Mat3 axes = box.axes();
  const Vec3& e = box.half_extents();
  std::array<Vec3, 8> out;
  for (int i = 0; i < 8; ++i) {
    const Vec3 sign((i & 4) ? -1.0 : 1.0, (i & 2) ? -1.0 : 1.0, (i & 1) ? -1.0 : 1.0);
    out[static_cast<std::size_t>(i)] = box.center() + axes * sign.cwiseProduct(e);
  }
  return out;
}

nn::Var BoxEncoder::forward_corners(nn::Tape& tape, const nn::ParamStore& store, const nn::Matrix& corners) const {
  if (corners.rows() == 0 || corners.rows() % 8 != 0 || corners.cols() != 3) {
    throw Error(ErrorKind::kShapeMismatch, "corner matrix must be (8n) x 3");
  }
  return corner_codes(tape, store, nullptr, corners);
}

Eigen::VectorXd encode_corners(const std::array<Vec3, 8>& corners, const BoxEncoder& encoder,
                               const nn::ParamStore& params) {
  nn::Matrix m(8, 3);
  for (int i = 0; i < 8; ++i) m.row(i) = corners[static_cast<std::size_t>(i)].transpose();
  nn::Tape tape;
  return tape.value(encoder.forward_corners(tape, params, m)).row(0).transpose();
}

Eigen::VectorXd encode_box(const BoxPose& box, const BoxEncoder& encoder, const nn::ParamStore& params) {
  return encode_corners(box_vertices(box), encoder, params);
}

Eigen::VectorXd encode_frame(const BoxMotionSequence::Frame& boxes, const BoxEncoder& encoder,
                             const nn::ParamStore& params) {
  std::vector<BoxPose> present;
  for (const auto& slot : boxes) {
    if (slot) present.push_back(*slot);
  }
  nn::Tape tape;
  const nn::Var codes = encoder.forward_frames(tape, params, std::vector<std::vector<BoxPose>>{present});
  return tape.value(codes).row(0).transpose();
}

Eigen::MatrixXd encode_sequence(const BoxMotionSequence& seq, const BoxEncoder& encoder, const nn::ParamStore& params) {
  nn::Tape tape;
  return tape.value(encoder.forward(tape, params, seq));
}

std::vector<double> encoder_backward(const BoxMotionSequence& seq, const BoxEncoder& encoder,
                                     const nn::ParamStore& params, const Eigen::MatrixXd& upstream) {
  nn::ParamStore local = params;
  local.zero_grad();
  nn::Tape tape;
  const nn::Var out = encoder.forward(tape, local, seq, true);
  const nn::Matrix& value = tape.value(out);
  if (upstream.rows() != value.rows() || upstream.cols() != value.cols()) {
    throw Error(ErrorKind::kShapeMismatch, "upstream gradient shape differs from encoder output");
  }
  tape.backward(out, nn::Matrix(upstream));
  const auto g = local.grads();
  return {g.begin(), g.end()};
}

}  // namespace proxymotion
