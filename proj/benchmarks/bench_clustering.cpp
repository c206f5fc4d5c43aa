#include <algorithm>
#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "phalcor/clustering.hpp"

using namespace phalcor;

namespace {

std::vector<ClusterPoint> blobs(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> jitter(0.0, 1.0);
  std::uniform_real_distribution<double> tau(0.5e-3, 20e-3), az(-kPi, kPi), el(0.2, kPi - 0.2);
  std::vector<ClusterPoint> centers(8);
  for (auto& c : centers) c = {tau(rng), {el(rng), az(rng)}};
  std::vector<ClusterPoint> pts;
  for (std::size_t i = 0; i < n; ++i) {
    if (i % 3 == 0) {
      pts.push_back({tau(rng), {el(rng), az(rng)}});
      continue;
    }
    const auto& c = centers[i % centers.size()];
    pts.push_back({c.tau + 0.1e-3 * jitter(rng),
                   {std::clamp(c.doa.elevation + 0.05 * jitter(rng), 0.0, kPi), c.doa.azimuth + 0.05 * jitter(rng)}});
  }
  return pts;
}

}  // namespace

static void BM_Dbscan(benchmark::State& state) {
  const auto pts = blobs(static_cast<std::size_t>(state.range(0)), 3);
  ClusterConfig cfg;
  cfg.subcluster = false;
  for (auto _ : state) benchmark::DoNotOptimize(dbscan_cluster(pts, cfg, 180));
}
BENCHMARK(BM_Dbscan)->Arg(1000)->Arg(5000)->Unit(benchmark::kMillisecond);

static void BM_ClusterWithSplit(benchmark::State& state) {
  const auto pts = blobs(static_cast<std::size_t>(state.range(0)), 4);
  ClusterConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(cluster_points(pts, cfg, 180));
}
BENCHMARK(BM_ClusterWithSplit)->Arg(1000)->Arg(5000)->Unit(benchmark::kMillisecond);
