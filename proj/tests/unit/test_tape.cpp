#include <gtest/gtest.h>

#include <functional>
#include <random>

#include "oracles.hpp"
#include "proxymotion/errors.hpp"
#include "proxymotion/nn/tape.hpp"

using namespace proxymotion;
using nn::Matrix;
using nn::Tape;
using nn::Var;

namespace {

Matrix random_matrix(std::mt19937_64& rng, int rows, int cols) {
  Matrix m(rows, cols);
  for (int i = 0; i < m.size(); ++i) m.data()[i] = testsupport::gaussian(rng);
  return m;
}

// Builds out = op(inputs) on a tape, reduces it with a fixed random weight
// and compares the tape gradient of every input to central differences.
void check_op(const std::vector<Matrix>& inputs,
              const std::function<Var(Tape&, const std::vector<Var>&)>& op, std::uint64_t seed) {
  nn::ParamStore store;
  std::vector<int> ids;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const int id = store.add("p" + std::to_string(i), static_cast<int>(inputs[i].rows()),
                             static_cast<int>(inputs[i].cols()));
    store.value(id) = inputs[i];
    ids.push_back(id);
  }
  Matrix weight;
  auto evaluate = [&](bool grad) {
    Tape tape;
    std::vector<Var> vars;
    for (int id : ids) vars.push_back(tape.param(store, id, grad));
    const Var out = op(tape, vars);
    if (weight.size() == 0) {
      std::mt19937_64 rng(seed);
      weight = random_matrix(rng, static_cast<int>(tape.value(out).rows()), static_cast<int>(tape.value(out).cols()));
    }
    const double value = (tape.value(out).array() * weight.array()).sum();
    if (grad) tape.backward(out, weight);
    return value;
  };
  store.zero_grad();
  evaluate(true);
  Eigen::VectorXd analytic = Eigen::Map<const Eigen::VectorXd>(store.grads().data(),
                                                               static_cast<Eigen::Index>(store.size()));
  Eigen::VectorXd x = Eigen::Map<const Eigen::VectorXd>(store.values().data(),
                                                        static_cast<Eigen::Index>(store.size()));
  auto f = [&](const Eigen::VectorXd& v) {
    std::copy(v.data(), v.data() + v.size(), store.values().begin());
    return evaluate(false);
  };
  const Eigen::VectorXd numeric = testsupport::central_diff(f, x, 1e-6);
  EXPECT_LT(testsupport::relative_error(analytic, numeric), 1e-6);
}

}  // namespace

class TapeOps : public ::testing::Test {
 protected:
  std::mt19937_64 rng{17};
  Matrix m(int r, int c) { return random_matrix(rng, r, c); }
};

TEST_F(TapeOps, Matmul) {
  check_op({m(3, 4), m(4, 2)}, [](Tape& t, const std::vector<Var>& v) { return nn::matmul(t, v[0], v[1]); }, 1);
}

TEST_F(TapeOps, MatmulTransposed) {
  check_op({m(3, 4), m(5, 4)}, [](Tape& t, const std::vector<Var>& v) { return nn::matmul_nt(t, v[0], v[1]); }, 2);
}

TEST_F(TapeOps, AddAndBroadcastRow) {
  check_op({m(3, 4), m(3, 4), m(1, 4)},
           [](Tape& t, const std::vector<Var>& v) { return nn::add_row(t, nn::add(t, v[0], v[1]), v[2]); }, 3);
}

TEST_F(TapeOps, ScaleAndSilu) {
  check_op({m(4, 5)}, [](Tape& t, const std::vector<Var>& v) { return nn::silu(t, nn::scale(t, v[0], -1.7)); }, 4);
}

TEST_F(TapeOps, SoftmaxRows) {
  check_op({m(3, 6)}, [](Tape& t, const std::vector<Var>& v) { return nn::softmax_rows(t, v[0]); }, 5);
}

TEST_F(TapeOps, LayerNorm) {
  check_op({m(4, 6), m(1, 6), m(1, 6)},
           [](Tape& t, const std::vector<Var>& v) { return nn::layer_norm(t, v[0], v[1], v[2]); }, 6);
}

TEST_F(TapeOps, SlicesAndConcats) {
  check_op({m(5, 4), m(2, 4)}, [](Tape& t, const std::vector<Var>& v) {
    const Var rows = nn::concat_rows(t, {nn::slice_rows(t, v[0], 1, 3), v[1]});
    return nn::concat_cols(t, {nn::slice_cols(t, rows, 2, 2), nn::slice_cols(t, rows, 0, 1)});
  }, 7);
}

TEST_F(TapeOps, PoolMeanMax) {
  check_op({m(12, 3)}, [](Tape& t, const std::vector<Var>& v) { return nn::pool_mean_max(t, v[0], 4); }, 8);
}

TEST_F(TapeOps, MeanSquaredError) {
  const Matrix target = m(3, 3);
  check_op({m(3, 3)}, [&](Tape& t, const std::vector<Var>& v) { return nn::mse(t, v[0], target); }, 9);
}

TEST_F(TapeOps, MultiHeadAttention) {
  std::vector<Matrix> in{m(5, 8)};
  for (int i = 0; i < 4; ++i) {
    in.push_back(m(8, 8) * 0.4);
    in.push_back(m(1, 8) * 0.1);
  }
  check_op(in, [](Tape& t, const std::vector<Var>& v) {
    nn::AttentionWeights w{v[1], v[2], v[3], v[4], v[5], v[6], v[7], v[8]};
    return nn::self_attention(t, v[0], w, 2);
  }, 10);
}

TEST(Tape, PoolTieGoesToLowestRow) {
  Tape tape;
  nn::ParamStore store;
  const int id = store.add("x", 3, 1);
  store.value(id) << 2.0, 2.0, 1.0;
  store.zero_grad();
  const Var out = nn::pool_mean_max(tape, tape.param(store, id, true), 3);
  EXPECT_DOUBLE_EQ(tape.value(out)(0, 0), 5.0 / 3.0 + 2.0);
  tape.backward(out, Matrix::Ones(1, 1));
  EXPECT_DOUBLE_EQ(store.grad(id)(0, 0), 1.0 / 3.0 + 1.0);
  EXPECT_DOUBLE_EQ(store.grad(id)(1, 0), 1.0 / 3.0);
}

TEST(Tape, FrozenParamsGetNoGradient) {
  Tape tape;
  nn::ParamStore store;
  const int a = store.add("a", 2, 2);
  const int b = store.add("b", 2, 2);
  store.fill(a, 1.0);
  store.fill(b, 2.0);
  store.zero_grad();
  const Var out = nn::mse(tape, nn::matmul(tape, tape.param(store, a, true), tape.param(store, b, false)),
                          Matrix::Zero(2, 2));
  tape.backward(out);
  EXPECT_GT(store.grad(a).norm(), 0.0);
  EXPECT_EQ(store.grad(b).norm(), 0.0);
}
