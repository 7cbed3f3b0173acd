#pragma once

#include <functional>
#include <vector>

#include "proxymotion/nn/params.hpp"

namespace proxymotion::nn {

struct Var {
  int id = -1;
};

/// Reverse-mode tape. Nodes are appended in evaluation order; backward()
/// walks them in reverse and calls each node's pullback. Nodes that do not
/// depend on a trainable parameter carry no pullback.
class Tape {
 public:
  using Pullback = std::function<void(Tape&, const Matrix& out_grad)>;

  Var constant(Matrix value);
  /// Reads a parameter block. Frozen blocks enter as constants.
  Var param(ParamStore& store, int block, bool trainable = true);
  Var param(const ParamStore& store, int block);

  Var push(Matrix value, bool requires_grad, Pullback pullback);

  const Matrix& value(Var v) const { return nodes_[static_cast<std::size_t>(v.id)].value; }
  bool requires_grad(Var v) const { return nodes_[static_cast<std::size_t>(v.id)].requires_grad; }

  /// Adds g into the gradient of v (no-op for constants).
  void accumulate(Var v, const Matrix& g);

  void backward(Var output, const Matrix& seed);
  void backward(Var scalar);

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    bool requires_grad = false;
    bool has_grad = false;
    Pullback pullback;
  };
  std::vector<Node> nodes_;
};

// Differentiable operations. Shapes follow the row-major convention: one
// token per row, features in columns.
Var matmul(Tape& t, Var a, Var b);
Var matmul_nt(Tape& t, Var a, Var b);  ///< a * b^T
Var add(Tape& t, Var a, Var b);
Var add_row(Tape& t, Var a, Var row);  ///< broadcasts a 1 x m row over a
Var scale(Tape& t, Var a, double s);
Var silu(Tape& t, Var a);
Var softmax_rows(Tape& t, Var a);
Var layer_norm(Tape& t, Var a, Var gain, Var bias, double eps = 1e-5);
Var slice_rows(Tape& t, Var a, int start, int count);
Var slice_cols(Tape& t, Var a, int start, int count);
Var concat_rows(Tape& t, const std::vector<Var>& parts);
Var concat_cols(Tape& t, const std::vector<Var>& parts);
/// Consecutive groups of group_size rows reduce to mean + element-wise max.
/// Max ties resolve to the lowest row index.
Var pool_mean_max(Tape& t, Var a, int group_size);
Var mse(Tape& t, Var a, const Matrix& target);

/// x W + b as one call.
Var linear(Tape& t, Var x, Var w, Var b);

struct AttentionWeights {
  Var wq, bq, wk, bk, wv, bv, wo, bo;
};

/// Multi-head scaled dot-product self-attention over the rows of x.
Var self_attention(Tape& t, Var x, const AttentionWeights& w, int heads);

}  // namespace proxymotion::nn
