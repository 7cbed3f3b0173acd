#include <benchmark/benchmark.h>

#include <random>

#include "proxymotion/geometry.hpp"

namespace {

using proxymotion::Vec3;

std::vector<Vec3> cloud(int n, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  std::vector<Vec3> pts;
  pts.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) pts.emplace_back(0.4 * g(rng), 0.15 * g(rng), 0.05 * g(rng));
  return pts;
}

void BM_FitObb(benchmark::State& state) {
  const auto pts = cloud(static_cast<int>(state.range(0)), 1);
  for (auto _ : state) benchmark::DoNotOptimize(proxymotion::fit_obb(pts));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_FitObb)->RangeMultiplier(8)->Range(64, 32768);

void BM_EstimateRigid(benchmark::State& state) {
  const auto src = cloud(static_cast<int>(state.range(0)), 2);
  const Eigen::Quaterniond q = Eigen::Quaterniond(0.9, 0.1, -0.3, 0.2).normalized();
  std::vector<Vec3> dst;
  for (const auto& p : src) dst.push_back(q * p + Vec3(0.3, 0.0, -0.2));
  for (auto _ : state) benchmark::DoNotOptimize(proxymotion::estimate_rigid(src, dst));
}
BENCHMARK(BM_EstimateRigid)->Arg(32)->Arg(512);

}  // namespace
