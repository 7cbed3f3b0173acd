#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "oracles.hpp"
#include "proxymotion/errors.hpp"
#include "proxymotion/box_encoder.hpp"

using namespace proxymotion;
using testsupport::gaussian;
using testsupport::random_rotation;
using testsupport::random_vec;

namespace {

struct Encoder {
  nn::ParamStore store;
  BoxEncoder enc;

  Encoder(int hidden, int heads, std::uint64_t seed) : enc({hidden, heads}, store) {
    enc.init(store, seed);
    // Nonzero biases so they take part in every check.
    std::mt19937_64 rng(seed + 1000);
    const auto& b = enc.blocks();
    for (int id : {b.b1, b.b2, b.bq, b.bk, b.bv, b.bo}) {
      auto v = store.value(id);
      for (Eigen::Index i = 0; i < v.size(); ++i) v.data()[i] = 0.2 * gaussian(rng);
    }
  }
};

BoxPose random_box(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> ext(0.05, 0.6);
  double e[3] = {ext(rng), ext(rng), ext(rng)};
  std::sort(e, e + 3, std::greater<>());
  return BoxPose(random_vec(rng, 1.0), random_rotation(rng), Vec3(e[0], e[1], e[2]));
}

// Independent forward pass written directly against the parameter blocks.
Eigen::MatrixXd block(const Encoder& e, int id) { return e.store.value(id); }

Eigen::RowVectorXd mean_max(const Eigen::MatrixXd& rows) {
  return rows.colwise().mean() + rows.colwise().maxCoeff();
}

Eigen::RowVectorXd oracle_box(const Encoder& e, const std::array<Vec3, 8>& corners) {
  const auto& b = e.enc.blocks();
  Eigen::MatrixXd feats(8, e.enc.config().hidden);
  for (int i = 0; i < 8; ++i) {
    Eigen::RowVectorXd z = corners[static_cast<std::size_t>(i)].transpose() * block(e, b.w1) + block(e, b.b1);
    for (Eigen::Index k = 0; k < z.size(); ++k) z[k] = z[k] / (1.0 + std::exp(-z[k]));
    feats.row(i) = z * block(e, b.w2) + block(e, b.b2);
  }
  return mean_max(feats);
}

Eigen::RowVectorXd oracle_frame(const Encoder& e, const std::vector<BoxPose>& boxes) {
  const int h = e.enc.config().hidden;
  if (boxes.empty()) return Eigen::RowVectorXd::Zero(h);
  const auto& b = e.enc.blocks();
  const int n = static_cast<int>(boxes.size());
  Eigen::MatrixXd x(n, h);
  for (int i = 0; i < n; ++i) x.row(i) = oracle_box(e, box_vertices(boxes[static_cast<std::size_t>(i)]));
  auto proj = [&](int w, int bias) {
    Eigen::MatrixXd y = x * block(e, w);
    y.rowwise() += block(e, bias).row(0);
    return y;
  };
  const Eigen::MatrixXd q = proj(b.wq, b.bq), k = proj(b.wk, b.bk), v = proj(b.wv, b.bv);
  const int heads = e.enc.config().heads;
  const int dh = h / heads;
  Eigen::MatrixXd merged(n, h);
  for (int hd = 0; hd < heads; ++hd) {
    for (int i = 0; i < n; ++i) {
      std::vector<double> s(static_cast<std::size_t>(n));
      for (int j = 0; j < n; ++j) {
        s[static_cast<std::size_t>(j)] =
            q.row(i).segment(hd * dh, dh).dot(k.row(j).segment(hd * dh, dh)) / std::sqrt(double(dh));
      }
      const double top = *std::max_element(s.begin(), s.end());
      double z = 0.0;
      for (double& sj : s) z += (sj = std::exp(sj - top));
      Eigen::RowVectorXd out = Eigen::RowVectorXd::Zero(dh);
      for (int j = 0; j < n; ++j) out += (s[static_cast<std::size_t>(j)] / z) * v.row(j).segment(hd * dh, dh);
      merged.row(i).segment(hd * dh, dh) = out;
    }
  }
  Eigen::MatrixXd attended = merged * block(e, b.wo);
  attended.rowwise() += block(e, b.bo).row(0);
  return mean_max(attended);
}

BoxMotionSequence random_sequence(std::mt19937_64& rng, int frames, int boxes, double absent_prob) {
  std::bernoulli_distribution drop(absent_prob);
  std::vector<BoxMotionSequence::Frame> out;
  for (int f = 0; f < frames; ++f) {
    BoxMotionSequence::Frame frame;
    for (int b = 0; b < boxes; ++b) {
      if (f > 0 && drop(rng)) {
        frame.emplace_back(std::nullopt);
      } else {
        frame.emplace_back(random_box(rng));
      }
    }
    out.push_back(std::move(frame));
  }
  return BoxMotionSequence(20.0, boxes, std::move(out));
}

std::vector<BoxPose> present(const BoxMotionSequence::Frame& frame) {
  std::vector<BoxPose> out;
  for (const auto& s : frame) {
    if (s) out.push_back(*s);
  }
  return out;
}

}  // namespace

TEST(BoxVertices, UnitBoxCorners) {
  const auto v = box_vertices(BoxPose(Vec3::Zero(), Quat::Identity(), Vec3::Constant(0.5)));
  EXPECT_EQ(v[0], Vec3(0.5, 0.5, 0.5));
  EXPECT_EQ(v[1], Vec3(0.5, 0.5, -0.5));
  EXPECT_EQ(v[2], Vec3(0.5, -0.5, 0.5));
  EXPECT_EQ(v[7], Vec3(-0.5, -0.5, -0.5));
  for (const Vec3& c : v) EXPECT_EQ(c.cwiseAbs(), Vec3::Constant(0.5));
}

TEST(BoxVertices, TranslationShiftsEveryCorner) {
  const Vec3 e(0.5, 0.3, 0.2);
  const auto a = box_vertices(BoxPose(Vec3::Zero(), Quat::Identity(), e));
  const auto b = box_vertices(BoxPose(Vec3(1, 0, 0), Quat::Identity(), e));
  for (int i = 0; i < 8; ++i) EXPECT_LT((b[i] - a[i] - Vec3(1, 0, 0)).norm(), 1e-15);
}

TEST(BoxVertices, RotationMapsCornerSet) {
  const Vec3 e(0.5, 0.3, 0.2);
  const Quat rz(Eigen::AngleAxisd(M_PI / 2, Vec3::UnitZ()));
  const auto a = box_vertices(BoxPose(Vec3::Zero(), Quat::Identity(), e));
  const auto b = box_vertices(BoxPose(Vec3::Zero(), rz, e));
  for (const Vec3& p : a) {
    const Vec3 target = rz * p;
    const bool found = std::any_of(b.begin(), b.end(), [&](const Vec3& q) { return (q - target).norm() < 1e-12; });
    EXPECT_TRUE(found);
  }
}

TEST(EncodeBox, ZeroWeightsGiveZeroCode) {
  nn::ParamStore store;
  BoxEncoder enc({16, 1}, store);
  const Eigen::VectorXd code = encode_box(BoxPose(Vec3(1, 2, 3), Quat::Identity(), Vec3(0.4, 0.2, 0.1)), enc, store);
  EXPECT_EQ(code.size(), 16);
  EXPECT_EQ(code.norm(), 0.0);
}

TEST(EncodeBox, ReversedVerticesExact) {
  Encoder e(32, 1, 5);
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    auto corners = box_vertices(random_box(rng));
    const Eigen::VectorXd a = encode_corners(corners, e.enc, e.store);
    std::reverse(corners.begin(), corners.end());
    EXPECT_EQ(a, encode_corners(corners, e.enc, e.store));
  }
}

TEST(EncodeBox, MatchesIndependentForward) {
  Encoder e(32, 1, 6);
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 20; ++trial) {
    const BoxPose box = random_box(rng);
    const Eigen::VectorXd got = encode_box(box, e.enc, e.store);
    const Eigen::RowVectorXd want = oracle_box(e, box_vertices(box));
    EXPECT_LT((got.transpose() - want).cwiseAbs().maxCoeff(), 1e-6);
  }
}

TEST(EncodeFrame, MatchesIndependentForward) {
  for (int heads : {1, 4}) {
    Encoder e(16, heads, 7);
    std::mt19937_64 rng(10);
    for (int n = 1; n <= kMaxBoxes; ++n) {
      std::vector<BoxPose> boxes;
      BoxMotionSequence::Frame frame;
      for (int i = 0; i < n; ++i) {
        boxes.push_back(random_box(rng));
        frame.emplace_back(boxes.back());
      }
      const Eigen::VectorXd got = encode_frame(frame, e.enc, e.store);
      EXPECT_LT((got.transpose() - oracle_frame(e, boxes)).cwiseAbs().maxCoeff(), 1e-6) << heads << " " << n;
    }
  }
}

TEST(EncodeFrame, SingleBoxAggregatesToTwiceAttended) {
  Encoder e(16, 1, 11);
  std::mt19937_64 rng(12);
  const BoxPose box = random_box(rng);
  // With one key the softmax weight is 1, so attention returns v W_o + b_o.
  const auto& b = e.enc.blocks();
  const Eigen::RowVectorXd code = oracle_box(e, box_vertices(box));
  const Eigen::RowVectorXd v = code * block(e, b.wv) + block(e, b.bv);
  const Eigen::RowVectorXd attended = v * block(e, b.wo) + block(e, b.bo);
  const Eigen::VectorXd got = encode_frame({box}, e.enc, e.store);
  EXPECT_LT((got.transpose() - 2.0 * attended).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(EncodeFrame, DuplicateBoxesMatchSingle) {
  Encoder e(16, 1, 13);
  std::mt19937_64 rng(14);
  const BoxPose box = random_box(rng);
  const Eigen::VectorXd one = encode_frame({box}, e.enc, e.store);
  const Eigen::VectorXd two = encode_frame({box, box}, e.enc, e.store);
  EXPECT_LT((one - two).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(EncodeFrame, AllAbsentIsZero) {
  Encoder e(16, 1, 15);
  const BoxMotionSequence::Frame frame(3, std::nullopt);
  const Eigen::VectorXd code = encode_frame(frame, e.enc, e.store);
  EXPECT_EQ(code.size(), 16);
  EXPECT_EQ(code.norm(), 0.0);
}

TEST(EncodeFrame, AbsentSlotsAreMasked) {
  Encoder e(16, 1, 16);
  std::mt19937_64 rng(17);
  const BoxPose a = random_box(rng), b = random_box(rng);
  EXPECT_EQ(encode_frame({a, std::nullopt, b}, e.enc, e.store), encode_frame({a, b}, e.enc, e.store));
}

TEST(EncodeFrame, BoxPermutationInvariance) {
  Encoder e(32, 1, 18);
  std::mt19937_64 rng(19);
  for (int trial = 0; trial < 50; ++trial) {
    BoxMotionSequence::Frame frame;
    for (int i = 0; i < kMaxBoxes; ++i) frame.emplace_back(random_box(rng));
    const Eigen::VectorXd a = encode_frame(frame, e.enc, e.store);
    std::shuffle(frame.begin(), frame.end(), rng);
    EXPECT_LT((a - encode_frame(frame, e.enc, e.store)).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(EncodeFrame, LipschitzInCenter) {
  Encoder e(32, 1, 20);
  std::mt19937_64 rng(21);
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const BoxPose a = random_box(rng), b = random_box(rng);
    const Vec3 dir = random_vec(rng, 1.0).normalized();
    const double delta = 1e-4;
    const BoxPose moved(a.center() + delta * dir, a.rotation(), a.half_extents());
    const double change = (encode_frame({a, b}, e.enc, e.store) - encode_frame({moved, b}, e.enc, e.store)).norm();
    worst = std::max(worst, change / delta);
  }
  EXPECT_LT(worst, 100.0);
}

TEST(EncodeSequence, SingleFrameMatchesEncodeFrame) {
  Encoder e(16, 1, 22);
  std::mt19937_64 rng(23);
  const auto seq = random_sequence(rng, 1, 3, 0.0);
  const Eigen::MatrixXd codes = encode_sequence(seq, e.enc, e.store);
  ASSERT_EQ(codes.rows(), 1);
  EXPECT_EQ(Eigen::VectorXd(codes.row(0).transpose()), encode_frame(seq.frame(0), e.enc, e.store));
}

TEST(EncodeSequence, ReversedFramesReverseCodes) {
  Encoder e(16, 1, 24);
  std::mt19937_64 rng(25);
  const auto seq = random_sequence(rng, 6, 3, 0.0);
  auto frames = seq.frames();
  std::reverse(frames.begin(), frames.end());
  const BoxMotionSequence rev(seq.fps(), seq.num_boxes(), frames);
  const Eigen::MatrixXd a = encode_sequence(seq, e.enc, e.store);
  const Eigen::MatrixXd b = encode_sequence(rev, e.enc, e.store);
  EXPECT_LT((a.colwise().reverse() - b).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(EncodeSequence, AbsentFrameIsZeroRow) {
  Encoder e(16, 1, 26);
  std::mt19937_64 rng(27);
  auto frames = random_sequence(rng, 3, 2, 0.0).frames();
  frames[1] = BoxMotionSequence::Frame(2, std::nullopt);
  const Eigen::MatrixXd codes = encode_sequence(BoxMotionSequence(20.0, 2, frames), e.enc, e.store);
  EXPECT_EQ(codes.row(1).norm(), 0.0);
  EXPECT_GT(codes.row(0).norm(), 0.0);
  EXPECT_LT((codes.row(2).transpose() - encode_frame(frames[2], e.enc, e.store)).norm(), 1e-12);
}

TEST(EncoderBackward, ZeroUpstreamGivesZeroGradient) {
  Encoder e(8, 1, 28);
  std::mt19937_64 rng(29);
  const auto seq = random_sequence(rng, 3, 3, 0.3);
  const auto g = encoder_backward(seq, e.enc, e.store, Eigen::MatrixXd::Zero(3, 8));
  EXPECT_TRUE(std::all_of(g.begin(), g.end(), [](double v) { return v == 0.0; }));
}

TEST(EncoderBackward, RejectsWrongUpstreamShape) {
  Encoder e(8, 1, 30);
  std::mt19937_64 rng(31);
  const auto seq = random_sequence(rng, 3, 2, 0.0);
  EXPECT_THROW(encoder_backward(seq, e.enc, e.store, Eigen::MatrixXd::Zero(2, 8)), Error);
}

namespace {

double encoder_fd_error(int hidden, std::uint64_t seed, const BoxMotionSequence& seq) {
  Encoder e(hidden, 1, seed);
  std::mt19937_64 rng(seed + 7);
  Eigen::MatrixXd upstream(seq.num_frames(), hidden);
  for (Eigen::Index i = 0; i < upstream.size(); ++i) upstream.data()[i] = gaussian(rng);
  const auto g = encoder_backward(seq, e.enc, e.store, upstream);
  const Eigen::VectorXd analytic = Eigen::Map<const Eigen::VectorXd>(g.data(), static_cast<Eigen::Index>(g.size()));
  nn::ParamStore probe = e.store;
  auto f = [&](const Eigen::VectorXd& x) {
    std::copy(x.data(), x.data() + x.size(), probe.values().begin());
    return (encode_sequence(seq, e.enc, probe).array() * upstream.array()).sum();
  };
  const Eigen::VectorXd x = Eigen::Map<const Eigen::VectorXd>(e.store.values().data(),
                                                              static_cast<Eigen::Index>(e.store.size()));
  return testsupport::relative_error(analytic, testsupport::central_diff(f, x, 1e-5));
}

}  // namespace

TEST(EncoderBackward, SingleBoxFiniteDifference) {
  std::mt19937_64 rng(32);
  const auto seq = random_sequence(rng, 1, 1, 0.0);
  EXPECT_LT(encoder_fd_error(4, 33, seq), 1e-4);
}

TEST(EncoderBackward, FiniteDifferenceOverRandomDraws) {
  double worst = 0.0;
  for (int draw = 0; draw < 20; ++draw) {
    std::mt19937_64 rng(100 + draw);
    const auto seq = random_sequence(rng, 3, 1 + draw % kMaxBoxes, 0.3);
    worst = std::max(worst, encoder_fd_error(8, 200 + draw, seq));
  }
  EXPECT_LT(worst, 1e-4);
}

TEST(EncoderBackward, DuplicateTieBreakDoesNotChangeLoss) {
  Encoder e(8, 1, 34);
  std::mt19937_64 rng(35);
  const BoxPose a = random_box(rng), b = random_box(rng);
  Eigen::MatrixXd up(1, 8);
  for (Eigen::Index i = 0; i < up.size(); ++i) up.data()[i] = gaussian(rng);
  auto loss = [&](BoxMotionSequence::Frame frame) {
    const int n = static_cast<int>(frame.size());
    const BoxMotionSequence seq(20.0, n, {std::move(frame)});
    return (encode_sequence(seq, e.enc, e.store).array() * up.array()).sum();
  };
  EXPECT_LT(std::abs(loss({a, a, b}) - loss({a, b, a})), 1e-9);
  EXPECT_LT(std::abs(loss({a, a, b}) - loss({b, a, a})), 1e-9);
  // The analytic gradient is also independent of which duplicate wins the max.
  auto grad = [&](BoxMotionSequence::Frame frame) {
    const int n = static_cast<int>(frame.size());
    const BoxMotionSequence seq(20.0, n, {std::move(frame)});
    const auto g = encoder_backward(seq, e.enc, e.store, up);
    return Eigen::VectorXd(Eigen::Map<const Eigen::VectorXd>(g.data(), static_cast<Eigen::Index>(g.size())));
  };
  EXPECT_LT((grad({a, a, b}) - grad({b, a, a})).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(EncoderBackward, MatchesPresentBoxesOnly) {
  Encoder e(8, 1, 36);
  std::mt19937_64 rng(37);
  const auto seq = random_sequence(rng, 4, 4, 0.5);
  for (int f = 0; f < seq.num_frames(); ++f) {
    const Eigen::RowVectorXd row = encode_sequence(seq, e.enc, e.store).row(f);
    EXPECT_LT((row - oracle_frame(e, present(seq.frame(f)))).cwiseAbs().maxCoeff(), 1e-9);
  }
}
