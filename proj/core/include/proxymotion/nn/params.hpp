#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace proxymotion::nn {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Named parameter blocks stored back to back in one flat vector, with a
/// gradient buffer of the same layout.
class ParamStore {
 public:
  struct Block {
    std::string name;
    int rows = 0;
    int cols = 0;
    std::size_t offset = 0;

    std::size_t size() const { return static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols); }
  };

  /// Registers a zero-filled block and returns its id.
  int add(const std::string& name, int rows, int cols);
  int find(const std::string& name) const;
  int id(const std::string& name) const;

  Eigen::Map<Matrix> value(int id);
  Eigen::Map<const Matrix> value(int id) const;
  Eigen::Map<Matrix> grad(int id);
  Eigen::Map<const Matrix> grad(int id) const;

  const std::vector<Block>& blocks() const { return blocks_; }
  const Block& block(int id) const { return blocks_.at(static_cast<std::size_t>(id)); }
  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }
  std::span<double> grads() { return grads_; }
  std::span<const double> grads() const { return grads_; }
  std::size_t size() const { return values_.size(); }

  void zero_grad();

  /// Uniform(-1/sqrt(rows), 1/sqrt(rows)) fill, i.e. scaled by fan-in for x * W.
  void init_uniform(int id, std::uint64_t seed, double gain = 1.0);
  void fill(int id, double v);
  void copy_block(int from, int to);

 private:
  std::vector<Block> blocks_;
  std::vector<double> values_;
  std::vector<double> grads_;
};

}  // namespace proxymotion::nn
