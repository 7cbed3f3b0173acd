#include <benchmark/benchmark.h>

#include "proxymotion/box_encoder.hpp"
#include "proxymotion/guidance.hpp"
#include "proxymotion/synthesis.hpp"

namespace {

using namespace proxymotion;

struct Scene {
  SkeletonMotion motion;
  BoxMotionSequence boxes;
};

Scene scene(int level) {
  ProceduralConfig pc;
  pc.seed = 5;
  SkeletonMotion m = gen_procedural_motion(pc.vocabulary.labels().front(), pc, 0);
  BoxMotionSequence b = skeleton_to_boxes(m, part_grouping(SkeletonDef::humanoid22(), level));
  return {std::move(m), std::move(b)};
}

// 60 frames, 22 joints.
void BM_GuidanceLossGrad(benchmark::State& state) {
  const Scene s = scene(static_cast<int>(state.range(0)));
  const GuidanceConfig cfg;
  Eigen::MatrixXd grad;
  for (auto _ : state) benchmark::DoNotOptimize(guidance_loss_grad(s.motion.joints(), s.boxes, cfg, &grad));
}
BENCHMARK(BM_GuidanceLossGrad)->Arg(1)->Arg(6);

void BM_EncodeSequence(benchmark::State& state) {
  const Scene s = scene(static_cast<int>(state.range(0)));
  EncoderConfig ec;
  nn::ParamStore store;
  BoxEncoder(ec, store).init(store, 1);
  const BoxEncoder enc(ec, static_cast<const nn::ParamStore&>(store));
  for (auto _ : state) {
    nn::Tape tape;
    benchmark::DoNotOptimize(enc.forward(tape, static_cast<const nn::ParamStore&>(store), s.boxes));
  }
}
BENCHMARK(BM_EncodeSequence)->Arg(1)->Arg(6);

}  // namespace
