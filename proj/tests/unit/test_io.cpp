#include <gtest/gtest.h>

#include <random>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "proxymotion/errors.hpp"
#include "proxymotion/io.hpp"
#include "proxymotion/synthesis.hpp"

using namespace proxymotion;

namespace {

ErrorKind kind_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "expected an Error";
  return ErrorKind::kIo;
}

// Hand-written 10-frame capture, two segments and twenty tracks.
std::string ten_frame_capture() {
  std::string out = "{\"version\":1,\"fps\":30,\"ground_segment_id\":0}\n";
  for (int f = 0; f < 10; ++f) {
    out += "{\"index\":" + std::to_string(f) + ",\"points\":[[0.0,0.0,0.0,1.0,0],[0.5,0.25," +
           std::to_string(0.125 * f) + ",0.75,1]]}\n";
  }
  out += "{\"tracks\":[";
  for (int t = 0; t < 20; ++t) {
    if (t) out += ",";
    out += "{\"id\":" + std::to_string(t) + ",\"segment\":" + std::to_string(t % 2) + ",\"pos\":[";
    for (int f = 0; f < 10; ++f) {
      if (f) out += ",";
      out += (f + t) % 7 == 0 ? "null" : "[" + std::to_string(f) + ".5,0.25,-1.0]";
    }
    out += "],\"vis\":[";
    for (int f = 0; f < 10; ++f) {
      if (f) out += ",";
      out += (f + t) % 7 == 0 ? "false" : "true";
    }
    out += "]}";
  }
  out += "]}\n";
  return out;
}

}  // namespace

TEST(CaptureIo, MinimalFile) {
  const CaptureSession s = parse_capture("{\"version\":1,\"fps\":20,\"ground_segment_id\":0}\n"
                                         "{\"index\":0,\"points\":[[1,2,3,0.5,0]]}\n");
  EXPECT_EQ(s.num_frames(), 1);
  EXPECT_EQ(s.frames()[0].size(), 1u);
  EXPECT_TRUE(s.tracks().empty());
}

TEST(CaptureIo, TrackWithUnknownSegmentIsInvariantError) {
  const std::string text =
      "{\"version\":1,\"fps\":20,\"ground_segment_id\":0}\n"
      "{\"index\":0,\"points\":[[1,2,3,0.5,0]]}\n"
      "{\"tracks\":[{\"id\":0,\"segment\":4,\"pos\":[[0,0,0]],\"vis\":[true]}]}\n";
  EXPECT_EQ(kind_of([&] { parse_capture(text); }), ErrorKind::kInvariant);
}

TEST(CaptureIo, VisibilityMismatchIsInvariantError) {
  const std::string text =
      "{\"version\":1,\"fps\":20,\"ground_segment_id\":0}\n"
      "{\"index\":0,\"points\":[[1,2,3,0.5,0]]}\n"
      "{\"tracks\":[{\"id\":0,\"segment\":0,\"pos\":[null],\"vis\":[true]}]}\n";
  EXPECT_EQ(kind_of([&] { parse_capture(text); }), ErrorKind::kInvariant);
}

TEST(CaptureIo, MalformedIsSchemaError) {
  EXPECT_EQ(kind_of([] { parse_capture("{\"version\":1,\"fps\":20}\n"); }), ErrorKind::kSchema);
  EXPECT_EQ(kind_of([] { parse_capture("not json\n"); }), ErrorKind::kSchema);
  EXPECT_EQ(kind_of([] { parse_capture("{\"version\":2,\"fps\":20,\"ground_segment_id\":0}\n"
                                       "{\"index\":0,\"points\":[]}\n"); }),
            ErrorKind::kSchema);
  EXPECT_EQ(kind_of([] { parse_capture("{\"version\":1,\"fps\":20,\"ground_segment_id\":0}\n"
                                       "{\"index\":1,\"points\":[[0,0,0,1,0]]}\n"); }),
            ErrorKind::kSchema);
}

TEST(CaptureIo, HandWrittenFixtureRoundTripsByteIdentically) {
  const std::string text = ten_frame_capture();
  const CaptureSession s = parse_capture(text);
  EXPECT_EQ(s.num_frames(), 10);
  EXPECT_EQ(s.tracks().size(), 20u);
  const std::string again = serialize_capture(s);
  EXPECT_EQ(serialize_capture(parse_capture(again)), again);
  EXPECT_EQ(parse_capture(again).frames(), s.frames());
  EXPECT_EQ(parse_capture(again).tracks(), s.tracks());
}

TEST(CaptureIo, SerializedFormIsStable) {
  // Our own serialization of the hand-written fixture is its canonical form.
  const std::string canonical = serialize_capture(parse_capture(ten_frame_capture()));
  EXPECT_EQ(serialize_capture(parse_capture(canonical)), canonical);
  EXPECT_EQ(canonical.back(), '\n');
}

TEST(CaptureIo, HingeFixtureRoundTrip) {
  const auto fx = testsupport::make_hinge_fixture(12);
  const std::string text = serialize_capture(fx.session);
  const CaptureSession back = parse_capture(text);
  EXPECT_EQ(back.frames(), fx.session.frames());
  EXPECT_EQ(back.tracks(), fx.session.tracks());
  EXPECT_EQ(serialize_capture(back), text);
}

TEST(BoxesIo, RoundTripWithAbsentSlots) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<BoxMotionSequence::Frame> frames;
    const int b = 1 + trial % 6;
    for (int f = 0; f < 5; ++f) {
      BoxMotionSequence::Frame frame;
      for (int k = 0; k < b; ++k) {
        if (f > 0 && (f + k + trial) % 3 == 0) {
          frame.push_back(std::nullopt);
        } else {
          frame.push_back(BoxPose(testsupport::random_vec(rng, 3.0), testsupport::random_rotation(rng),
                                  Vec3(0.5, 0.3, 0.1) * (1.0 + 0.1 * k)));
        }
      }
      frames.push_back(frame);
    }
    const BoxMotionSequence seq(25.0, b, frames);
    const std::string text = serialize_boxes(seq);
    EXPECT_EQ(parse_boxes(text), seq);
    EXPECT_EQ(serialize_boxes(parse_boxes(text)), text);
  }
}

TEST(BoxesIo, RejectsFrameZeroAbsence) {
  EXPECT_EQ(kind_of([] { parse_boxes("{\"version\":1,\"fps\":20,\"num_boxes\":1,\"frames\":[[null]]}"); }),
            ErrorKind::kInvariant);
  EXPECT_EQ(kind_of([] { parse_boxes("{\"version\":1,\"fps\":20,\"num_boxes\":1}"); }), ErrorKind::kSchema);
}

TEST(MotionIo, ZeroMotionRoundTrip) {
  const SkeletonMotion m(20.0, "humanoid22", Eigen::MatrixXd::Zero(1, 66));
  EXPECT_EQ(parse_motion(serialize_motion(m)), m);
}

TEST(MotionIo, ProceduralWalkRoundTrip) {
  ProceduralConfig cfg;
  cfg.seed = 11;
  const SkeletonMotion walk = gen_procedural_motion("walk", cfg, 0);
  const std::string text = serialize_motion(walk);
  const SkeletonMotion back = parse_motion(text);
  EXPECT_EQ(back, walk);
  EXPECT_EQ(back.label(), std::optional<std::string>("walk"));
}

TEST(MotionIo, NullLabelAndNanRejected) {
  const SkeletonMotion m(20.0, "humanoid22", Eigen::MatrixXd::Constant(2, 6, 0.25));
  EXPECT_EQ(parse_motion(serialize_motion(m)).label(), std::nullopt);
  EXPECT_EQ(kind_of([] { parse_motion("{\"version\":1,\"fps\":20,\"skeleton\":\"s\",\"label\":null,"
                                      "\"joints\":[[[0,0,0],[0,-1,0]]]}"); }),
            ErrorKind::kInvariant);
}

TEST(FileIo, MissingFileIsIoError) {
  EXPECT_EQ(kind_of([] { read_file("/nonexistent/dir/file.json"); }), ErrorKind::kIo);
}
