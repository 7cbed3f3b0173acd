#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "proxymotion/nn/tape.hpp"
#include "proxymotion/types.hpp"

namespace proxymotion {

struct EncoderConfig {
  int hidden = 128;
  int heads = 1;
};

/// Permutation-invariant box motion encoder.
///
/// Each box is described by its 8 corner positions. A shared two-layer MLP
/// (3 -> h -> h, SiLU between) embeds every corner, and the corner features
/// are pooled as mean + element-wise max into one code per box. Within a
/// frame, the codes of the present boxes exchange information through one
/// self-attention layer (softmax over present boxes only), and the attended
/// codes are pooled with the same mean + max rule into the frame code. A
/// frame with no present box maps to the zero code.
class BoxEncoder {
 public:
  /// Registers the encoder's parameter blocks in store under prefix.
  BoxEncoder(EncoderConfig cfg, nn::ParamStore& store, const std::string& prefix = "enc.");
  /// Binds to blocks already present in store.
  BoxEncoder(EncoderConfig cfg, const nn::ParamStore& store, const std::string& prefix = "enc.");

  const EncoderConfig& config() const { return cfg_; }

  /// Fan-in scaled uniform weights, zero biases.
  void init(nn::ParamStore& store, std::uint64_t seed) const;

  /// F x h frame codes. When store is non-const and trainable is true the
  /// encoder parameters receive gradients on backward.
  nn::Var forward(nn::Tape& tape, nn::ParamStore& store, const BoxMotionSequence& seq, bool trainable) const;
  nn::Var forward(nn::Tape& tape, const nn::ParamStore& store, const BoxMotionSequence& seq) const;

  /// Codes for an explicit list of frames, each a list of present boxes.
  nn::Var forward_frames(nn::Tape& tape, nn::ParamStore& store, const std::vector<std::vector<BoxPose>>& frames,
                         bool trainable) const;
  nn::Var forward_frames(nn::Tape& tape, const nn::ParamStore& store,
                         const std::vector<std::vector<BoxPose>>& frames) const;

  /// Per-box corner codes before attention, n x h.
  nn::Var forward_boxes(nn::Tape& tape, nn::ParamStore& store, const std::vector<BoxPose>& boxes,
                        bool trainable) const;

  /// Pooled codes for n*8 corner rows, frozen pass, n x h.
  nn::Var forward_corners(nn::Tape& tape, const nn::ParamStore& store, const nn::Matrix& corners) const;

  struct Blocks {
    int w1, b1, w2, b2;
    int wq, bq, wk, bk, wv, bv, wo, bo;
  };
  const Blocks& blocks() const { return blocks_; }

 private:
  // grad_target is null for a frozen forward pass.
  nn::Var param(nn::Tape& tape, const nn::ParamStore& store, nn::ParamStore* grad_target, int block) const;
  nn::Var corner_codes(nn::Tape& tape, const nn::ParamStore& store, nn::ParamStore* grad_target,
                       const nn::Matrix& corners) const;
  nn::Var frames_impl(nn::Tape& tape, const nn::ParamStore& store, nn::ParamStore* grad_target,
                      const std::vector<std::vector<BoxPose>>& frames) const;

  EncoderConfig cfg_;
  Blocks blocks_{};
};

/// Corners center + R * (+-e0, +-e1, +-e2), sign pattern enumerated with the
/// x sign slowest: (+,+,+), (+,+,-), (+,-,+), ... , (-,-,-).
std::array<Vec3, 8> box_vertices(const BoxPose& box);

Eigen::VectorXd encode_box(const BoxPose& box, const BoxEncoder& encoder, const nn::ParamStore& params);
/// Same pooling applied to caller-supplied corners in any order.
Eigen::VectorXd encode_corners(const std::array<Vec3, 8>& corners, const BoxEncoder& encoder,
                               const nn::ParamStore& params);
Eigen::VectorXd encode_frame(const BoxMotionSequence::Frame& boxes, const BoxEncoder& encoder,
                             const nn::ParamStore& params);
/// One row per frame.
Eigen::MatrixXd encode_sequence(const BoxMotionSequence& seq, const BoxEncoder& encoder, const nn::ParamStore& params);

/// Gradient of sum(upstream .* encode_sequence(seq)) with respect to every
/// entry of params (entries outside the encoder's blocks stay zero).
std::vector<double> encoder_backward(const BoxMotionSequence& seq, const BoxEncoder& encoder,
                                     const nn::ParamStore& params, const Eigen::MatrixXd& upstream);

}  // namespace proxymotion
