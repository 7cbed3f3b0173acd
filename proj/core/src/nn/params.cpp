#include "proxymotion/nn/params.hpp"

#include <cmath>
#include <random>

#include "proxymotion/errors.hpp"

namespace proxymotion::nn {

int ParamStore::add(const std::string& name, int rows, int cols) {
  if (find(name) >= 0) throw Error(ErrorKind::kInvariant, "duplicate parameter block " + name);
  if (rows <= 0 || cols <= 0) throw Error(ErrorKind::kShapeMismatch, "empty parameter block " + name);
  Block b{name, rows, cols, values_.size()};
  values_.resize(values_.size() + b.size(), 0.0);
  grads_.resize(values_.size(), 0.0);
  blocks_.push_back(std::move(b));
  return static_cast<int>(blocks_.size()) - 1;
}

int ParamStore::find(const std::string& name) const {
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    if (blocks_[i].name == name) return static_cast<int>(i);
  }
  return -1;
}

int ParamStore::id(const std::string& name) const {
  const int i = find(name);
  if (i < 0) throw Error(ErrorKind::kShapeMismatch, "unknown parameter block " + name);
  return i;
}

Eigen::Map<Matrix> ParamStore::value(int id) {
  const Block& b = block(id);
  return {values_.data() + b.offset, b.rows, b.cols};
}

Eigen::Map<const Matrix> ParamStore::value(int id) const {
  const Block& b = block(id);
  return {values_.data() + b.offset, b.rows, b.cols};
}

Eigen::Map<Matrix> ParamStore::grad(int id) {
  const Block& b = block(id);
  return {grads_.data() + b.offset, b.rows, b.cols};
}

Eigen::Map<const Matrix> ParamStore::grad(int id) const {
  const Block& b = block(id);
  return {grads_.data() + b.offset, b.rows, b.cols};
}

void ParamStore::zero_grad() { std::fill(grads_.begin(), grads_.end(), 0.0); }

void ParamStore::init_uniform(int id, std::uint64_t seed, double gain) {
  const Block& b = block(id);
  std::mt19937_64 engine(seed);
  const double bound = gain / std::sqrt(static_cast<double>(b.rows));
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (std::size_t i = 0; i < b.size(); ++i) values_[b.offset + i] = dist(engine);
}

void ParamStore::fill(int id, double v) { value(id).setConstant(v); }

void ParamStore::copy_block(int from, int to) {
  const Block& a = block(from);
  const Block& b = block(to);
  if (a.rows != b.rows || a.cols != b.cols) throw Error(ErrorKind::kShapeMismatch, "copy between mismatched blocks");
  std::copy_n(values_.begin() + static_cast<std::ptrdiff_t>(a.offset), a.size(),
              values_.begin() + static_cast<std::ptrdiff_t>(b.offset));
}

}  // namespace proxymotion::nn
