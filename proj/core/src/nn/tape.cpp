#include "proxymotion/nn/tape.hpp"

#include <algorithm>
#include <cmath>

#include "proxymotion/errors.hpp"

namespace proxymotion::nn {

namespace {

void check(bool ok, const char* what) {
  if (!ok) throw Error(ErrorKind::kShapeMismatch, what);
}

}  // namespace

Var Tape::constant(Matrix value) { return push(std::move(value), false, nullptr); }

Var Tape::param(ParamStore& store, int block, bool trainable) {
  Matrix value = store.value(block);
  if (!trainable) return constant(std::move(value));
  ParamStore* owner = &store;
  return push(std::move(value), true,
              [owner, block](Tape&, const Matrix& g) { owner->grad(block) += g; });
}

Var Tape::param(const ParamStore& store, int block) { return constant(store.value(block)); }

Var Tape::push(Matrix value, bool requires_grad, Pullback pullback) {
  Node node;
  node.value = std::move(value);
  node.requires_grad = requires_grad;
  if (requires_grad) node.pullback = std::move(pullback);
  nodes_.push_back(std::move(node));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

void Tape::accumulate(Var v, const Matrix& g) {
  Node& node = nodes_[static_cast<std::size_t>(v.id)];
  if (!node.requires_grad) return;
  if (!node.has_grad) {
    node.grad = g;
    node.has_grad = true;
  } else {
    node.grad += g;
  }
}

void Tape::backward(Var output, const Matrix& seed) {
  Node& out = nodes_[static_cast<std::size_t>(output.id)];
  check(seed.rows() == out.value.rows() && seed.cols() == out.value.cols(), "backward seed shape");
  if (!out.requires_grad) return;
  out.grad = seed;
  out.has_grad = true;
  for (int i = output.id; i >= 0; --i) {
    Node& node = nodes_[static_cast<std::size_t>(i)];
    if (node.requires_grad && node.has_grad && node.pullback) node.pullback(*this, node.grad);
  }
}

void Tape::backward(Var scalar) { backward(scalar, Matrix::Ones(1, 1)); }

Var matmul(Tape& t, Var a, Var b) {
  check(t.value(a).cols() == t.value(b).rows(), "matmul shape");
  Matrix out = t.value(a) * t.value(b);
  const bool rg = t.requires_grad(a) || t.requires_grad(b);
  return t.push(std::move(out), rg, [a, b](Tape& tp, const Matrix& g) {
    if (tp.requires_grad(a)) tp.accumulate(a, g * tp.value(b).transpose());
    if (tp.requires_grad(b)) tp.accumulate(b, tp.value(a).transpose() * g);
  });
}

Var matmul_nt(Tape& t, Var a, Var b) {
  check(t.value(a).cols() == t.value(b).cols(), "matmul_nt shape");
  Matrix out = t.value(a) * t.value(b).transpose();
  const bool rg = t.requires_grad(a) || t.requires_grad(b);
  return t.push(std::move(out), rg, [a, b](Tape& tp, const Matrix& g) {
    if (tp.requires_grad(a)) tp.accumulate(a, g * tp.value(b));
    if (tp.requires_grad(b)) tp.accumulate(b, g.transpose() * tp.value(a));
  });
}

Var add(Tape& t, Var a, Var b) {
  check(t.value(a).rows() == t.value(b).rows() && t.value(a).cols() == t.value(b).cols(), "add shape");
  Matrix out = t.value(a) + t.value(b);
  const bool rg = t.requires_grad(a) || t.requires_grad(b);
  return t.push(std::move(out), rg, [a, b](Tape& tp, const Matrix& g) {
    tp.accumulate(a, g);
    tp.accumulate(b, g);
  });
}

Var add_row(Tape& t, Var a, Var row) {
  check(t.value(row).rows() == 1 && t.value(row).cols() == t.value(a).cols(), "add_row shape");
  Matrix out = t.value(a).rowwise() + t.value(row).row(0);
  const bool rg = t.requires_grad(a) || t.requires_grad(row);
  return t.push(std::move(out), rg, [a, row](Tape& tp, const Matrix& g) {
    tp.accumulate(a, g);
    if (tp.requires_grad(row)) tp.accumulate(row, g.colwise().sum());
  });
}

Var scale(Tape& t, Var a, double s) {
  Matrix out = t.value(a) * s;
  return t.push(std::move(out), t.requires_grad(a), [a, s](Tape& tp, const Matrix& g) { tp.accumulate(a, g * s); });
}

Var silu(Tape& t, Var a) {
  const Matrix& x = t.value(a);
  Matrix out = x.array() / (1.0 + (-x.array()).exp());
  return t.push(std::move(out), t.requires_grad(a), [a](Tape& tp, const Matrix& g) {
    const Matrix& xv = tp.value(a);
    const Eigen::ArrayXXd sig = 1.0 / (1.0 + (-xv.array()).exp());
    Matrix d = g.array() * (sig * (1.0 + xv.array() * (1.0 - sig)));
    tp.accumulate(a, d);
  });
}

Var softmax_rows(Tape& t, Var a) {
  const Matrix& x = t.value(a);
  Matrix out(x.rows(), x.cols());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const double m = x.row(r).maxCoeff();
    out.row(r) = (x.row(r).array() - m).exp();
    out.row(r) /= out.row(r).sum();
  }
  const int self = static_cast<int>(t.size());
  return t.push(std::move(out), t.requires_grad(a), [a, self](Tape& tp, const Matrix& g) {
    const Matrix& y = tp.value(Var{self});
    const Eigen::VectorXd dot = (g.array() * y.array()).rowwise().sum();
    Matrix d = y.array() * (g.colwise() - dot).array();
    tp.accumulate(a, d);
  });
}

Var layer_norm(Tape& t, Var a, Var gain, Var bias, double eps) {
  const Matrix& x = t.value(a);
  const Eigen::Index n = x.cols();
  check(t.value(gain).cols() == n && t.value(bias).cols() == n, "layer_norm shape");
  Matrix xhat(x.rows(), n);
  Eigen::VectorXd inv(x.rows());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const double mean = x.row(r).mean();
    const double var = (x.row(r).array() - mean).square().mean();
    inv[r] = 1.0 / std::sqrt(var + eps);
    xhat.row(r) = (x.row(r).array() - mean) * inv[r];
  }
  Matrix out = (xhat.array().rowwise() * t.value(gain).row(0).array()).rowwise() + t.value(bias).row(0).array();
  const bool rg = t.requires_grad(a) || t.requires_grad(gain) || t.requires_grad(bias);
  return t.push(std::move(out), rg, [a, gain, bias, xhat, inv](Tape& tp, const Matrix& g) {
    if (tp.requires_grad(bias)) tp.accumulate(bias, g.colwise().sum());
    if (tp.requires_grad(gain)) tp.accumulate(gain, (g.array() * xhat.array()).colwise().sum().matrix());
    if (!tp.requires_grad(a)) return;
    const Matrix gx = g.array().rowwise() * tp.value(gain).row(0).array();
    Matrix d(gx.rows(), gx.cols());
    for (Eigen::Index r = 0; r < gx.rows(); ++r) {
      const double m1 = gx.row(r).mean();
      const double m2 = (gx.row(r).array() * xhat.row(r).array()).mean();
      d.row(r) = inv[r] * (gx.row(r).array() - m1 - xhat.row(r).array() * m2);
    }
    tp.accumulate(a, d);
  });
}

Var slice_rows(Tape& t, Var a, int start, int count) {
  const Matrix& x = t.value(a);
  check(start >= 0 && count >= 0 && start + count <= x.rows(), "slice_rows range");
  Matrix out = x.middleRows(start, count);
  const Eigen::Index rows = x.rows();
  const Eigen::Index cols = x.cols();
  return t.push(std::move(out), t.requires_grad(a), [a, start, count, rows, cols](Tape& tp, const Matrix& g) {
    Matrix d = Matrix::Zero(rows, cols);
    d.middleRows(start, count) = g;
    tp.accumulate(a, d);
  });
}

Var slice_cols(Tape& t, Var a, int start, int count) {
  const Matrix& x = t.value(a);
  check(start >= 0 && count >= 0 && start + count <= x.cols(), "slice_cols range");
  Matrix out = x.middleCols(start, count);
  const Eigen::Index rows = x.rows();
  const Eigen::Index cols = x.cols();
  return t.push(std::move(out), t.requires_grad(a), [a, start, count, rows, cols](Tape& tp, const Matrix& g) {
    Matrix d = Matrix::Zero(rows, cols);
    d.middleCols(start, count) = g;
    tp.accumulate(a, d);
  });
}

Var concat_rows(Tape& t, const std::vector<Var>& parts) {
  check(!parts.empty(), "concat_rows of nothing");
  const Eigen::Index cols = t.value(parts.front()).cols();
  Eigen::Index rows = 0;
  bool rg = false;
  for (Var p : parts) {
    check(t.value(p).cols() == cols, "concat_rows shape");
    rows += t.value(p).rows();
    rg = rg || t.requires_grad(p);
  }
  Matrix out(rows, cols);
  Eigen::Index at = 0;
  for (Var p : parts) {
    out.middleRows(at, t.value(p).rows()) = t.value(p);
    at += t.value(p).rows();
  }
  return t.push(std::move(out), rg, [parts](Tape& tp, const Matrix& g) {
    Eigen::Index offset = 0;
    for (Var p : parts) {
      const Eigen::Index r = tp.value(p).rows();
      if (tp.requires_grad(p)) tp.accumulate(p, g.middleRows(offset, r));
      offset += r;
    }
  });
}

Var concat_cols(Tape& t, const std::vector<Var>& parts) {
  check(!parts.empty(), "concat_cols of nothing");
  const Eigen::Index rows = t.value(parts.front()).rows();
  Eigen::Index cols = 0;
  bool rg = false;
  for (Var p : parts) {
    check(t.value(p).rows() == rows, "concat_cols shape");
    cols += t.value(p).cols();
    rg = rg || t.requires_grad(p);
  }
  Matrix out(rows, cols);
  Eigen::Index at = 0;
  for (Var p : parts) {
    out.middleCols(at, t.value(p).cols()) = t.value(p);
    at += t.value(p).cols();
  }
  return t.push(std::move(out), rg, [parts](Tape& tp, const Matrix& g) {
    Eigen::Index offset = 0;
    for (Var p : parts) {
      const Eigen::Index c = tp.value(p).cols();
      if (tp.requires_grad(p)) tp.accumulate(p, g.middleCols(offset, c));
      offset += c;
    }
  });
}

Var pool_mean_max(Tape& t, Var a, int group_size) {
  const Matrix& x = t.value(a);
  check(group_size >= 1 && x.rows() % group_size == 0, "pool_mean_max group size");
  const Eigen::Index groups = x.rows() / group_size;
  const Eigen::Index cols = x.cols();
  Matrix out(groups, cols);
  std::vector<int> argmax(static_cast<std::size_t>(groups * cols));
  std::vector<double> column(static_cast<std::size_t>(group_size));
  for (Eigen::Index gi = 0; gi < groups; ++gi) {
    const Eigen::Index base = gi * group_size;
    for (Eigen::Index c = 0; c < cols; ++c) {
      int best = 0;
      double best_v = x(base, c);
      for (int r = 0; r < group_size; ++r) {
        const double v = x(base + r, c);
        column[static_cast<std::size_t>(r)] = v;
        if (v > best_v) {
          best_v = v;
          best = r;
        }
      }
      // Summing in sorted order makes the mean independent of row order, bit for bit.
      std::sort(column.begin(), column.end());
      double sum = 0.0;
      for (double v : column) sum += v;
      out(gi, c) = sum / group_size + best_v;
      argmax[static_cast<std::size_t>(gi * cols + c)] = best;
    }
  }
  const Eigen::Index rows = x.rows();
  return t.push(std::move(out), t.requires_grad(a),
                [a, group_size, groups, cols, rows, argmax = std::move(argmax)](Tape& tp, const Matrix& g) {
                  Matrix d(rows, cols);
                  for (Eigen::Index gi = 0; gi < groups; ++gi) {
                    const Eigen::Index base = gi * group_size;
                    for (Eigen::Index c = 0; c < cols; ++c) {
                      const double share = g(gi, c) / group_size;
                      for (int r = 0; r < group_size; ++r) d(base + r, c) = share;
                      d(base + argmax[static_cast<std::size_t>(gi * cols + c)], c) += g(gi, c);
                    }
                  }
                  tp.accumulate(a, d);
                });
}

Var mse(Tape& t, Var a, const Matrix& target) {
  const Matrix& x = t.value(a);
  check(x.rows() == target.rows() && x.cols() == target.cols(), "mse shape");
  Matrix diff = x - target;
  const double n = static_cast<double>(diff.size());
  Matrix out(1, 1);
  out(0, 0) = diff.squaredNorm() / n;
  return t.push(std::move(out), t.requires_grad(a), [a, diff = std::move(diff), n](Tape& tp, const Matrix& g) {
    tp.accumulate(a, diff * (2.0 * g(0, 0) / n));
  });
}

Var linear(Tape& t, Var x, Var w, Var b) { return add_row(t, matmul(t, x, w), b); }

Var self_attention(Tape& t, Var x, const AttentionWeights& w, int heads) {
  const Var q = linear(t, x, w.wq, w.bq);
  const Var k = linear(t, x, w.wk, w.bk);
  const Var v = linear(t, x, w.wv, w.bv);
  const int width = static_cast<int>(t.value(q).cols());
  check(heads >= 1 && width % heads == 0, "attention width must divide into heads");
  const int head_dim = width / heads;
  const double norm = 1.0 / std::sqrt(static_cast<double>(head_dim));
  std::vector<Var> outputs;
  outputs.reserve(static_cast<std::size_t>(heads));
  for (int h = 0; h < heads; ++h) {
    const Var qh = heads == 1 ? q : slice_cols(t, q, h * head_dim, head_dim);
    const Var kh = heads == 1 ? k : slice_cols(t, k, h * head_dim, head_dim);
    const Var vh = heads == 1 ? v : slice_cols(t, v, h * head_dim, head_dim);
    const Var weights = softmax_rows(t, scale(t, matmul_nt(t, qh, kh), norm));
    outputs.push_back(matmul(t, weights, vh));
  }
  const Var merged = heads == 1 ? outputs.front() : concat_cols(t, outputs);
  return linear(t, merged, w.wo, w.bo);
}

}  // namespace proxymotion::nn
