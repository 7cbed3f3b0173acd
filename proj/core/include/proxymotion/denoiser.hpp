#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "proxymotion/box_encoder.hpp"
#include "proxymotion/nn/params.hpp"
#include "proxymotion/nn/tape.hpp"
#include "proxymotion/schedule.hpp"
#include "proxymotion/types.hpp"

namespace proxymotion {

struct ModelConfig {
  DiffusionConfig diffusion;
  EncoderConfig encoder;
  std::vector<std::string> labels = LabelVocabulary().labels();
  double fps = 20.0;
  std::string skeleton = "humanoid22";

  void validate() const;
  int features() const { return 3 * diffusion.joints; }
};

/// Which parameter group receives gradients in a forward pass.
enum class Trainable { kNone, kBase, kControl };

/// Transformer denoiser over F x 3J motion, predicting the clean motion.
///
/// Base network: frame projection 3J -> d plus sinusoidal frame position,
/// plus a conditioning row (timestep MLP + label embedding, row 0 is the
/// null label) broadcast over frames; pre-LN blocks of self-attention and a
/// d -> 2d -> d SiLU feed-forward; final layer norm and projection d -> 3J.
///
/// Control branch: starts from the same frame embedding plus a projection of
/// the per-frame box codes, runs a copy of the base blocks, and after each
/// block adds ctrl_l Z_l + z_l into the base hidden state. Z_l and z_l are
/// zero at initialization.
///
/// Everything works in normalized coordinates (x - mean) / std.
class MotionModel {
 public:
  explicit MotionModel(ModelConfig cfg);

  const ModelConfig& config() const { return cfg_; }
  nn::ParamStore& params() { return params_; }
  const nn::ParamStore& params() const { return params_; }
  const BoxEncoder& encoder() const { return encoder_; }
  LabelVocabulary vocabulary() const { return LabelVocabulary(cfg_.labels); }

  /// Random base and encoder weights, control blocks copied from the base,
  /// zero residual projections.
  void init(std::uint64_t seed);
  /// Copies every base block into its control twin.
  void copy_base_to_control();
  /// Sets Z_l and z_l to zero.
  void zero_control_residuals();

  /// Control training updates both the control branch and the encoder.
  bool in_group(int block, Trainable group) const;

  const Eigen::RowVectorXd& mean() const { return mean_; }
  const Eigen::RowVectorXd& stddev() const { return std_; }
  void set_normalization(Eigen::RowVectorXd mean, Eigen::RowVectorXd stddev);
  Eigen::MatrixXd normalize(const Eigen::MatrixXd& raw) const;
  Eigen::MatrixXd denormalize(const Eigen::MatrixXd& norm) const;

  /// Frame codes F x h for a box sequence, frozen.
  Eigen::MatrixXd encode(const BoxMotionSequence& seq) const;

  /// Tape forward. label is a vocabulary index (0 = null). codes, when
  /// given, is an F x h node (from the encoder or a constant).
  nn::Var forward(nn::Tape& tape, const nn::Matrix& x_t, int t, int label, std::optional<nn::Var> codes,
                  Trainable mode);

  /// Frozen prediction of normalized x0. codes may be null.
  Eigen::MatrixXd denoise(const Eigen::MatrixXd& x_t, int t, int label, const Eigen::MatrixXd* codes) const;

 private:
  struct Block {
    int ln1_g, ln1_b, wq, bq, wk, bk, wv, bv, wo, bo, ln2_g, ln2_b, f_w1, f_b1, f_w2, f_b2;
  };
  Block register_block(const std::string& prefix);
  nn::Var run_block(nn::Tape& tape, nn::Var h, const Block& b, bool trainable) const;
  nn::Var p(nn::Tape& tape, int block, bool trainable) const;

  ModelConfig cfg_;
  nn::ParamStore params_;
  BoxEncoder encoder_;
  int in_w_, in_b_, t_w1_, t_b1_, t_w2_, t_b2_, label_, out_g_, out_b_, out_w_, out_bias_;
  int code_w_, code_b_;
  std::vector<Block> base_blocks_;
  std::vector<Block> ctrl_blocks_;
  std::vector<int> zero_w_;
  std::vector<int> zero_b_;
  Eigen::RowVectorXd mean_;
  Eigen::RowVectorXd std_;
};

/// sin/cos embedding of a scalar position: first half sin(p w_i), second half
/// cos(p w_i), w_i = 10000^(-i / (dim/2)).
Eigen::RowVectorXd sinusoidal_embedding(double position, int dim);

}  // namespace proxymotion
