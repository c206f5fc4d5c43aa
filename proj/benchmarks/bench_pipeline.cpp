#include <benchmark/benchmark.h>

#include "phalcor/pipeline.hpp"

using namespace phalcor;

namespace {

ReflectionSet paths() {
  ReflectionSet refs;
  refs.direct.doa = {kPi / 2, 0.0};
  refs.reflections = {{2.3e-3, 0.6, {kPi / 2, 1.2}, 1}, {5.1e-3, 0.5, {kPi / 3, -1.5}, 1}};
  return refs;
}

}  // namespace

static void BM_Detect(benchmark::State& state) {
  const auto array = state.range(0) ? em32_like() : semicircular6();
  const Estimator est(array, PipelineConfig{}, 16000.0);
  SceneConfig scene;
  scene.array = array;
  const auto signal = render_array_signal(scene, paths());
  for (auto _ : state) benchmark::DoNotOptimize(est.detect(signal));
}
BENCHMARK(BM_Detect)->Arg(0)->Arg(1)->Unit(benchmark::kSecond)->Iterations(1);

static void BM_EstimatorSetup(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(Estimator(semicircular6(), PipelineConfig{}, 16000.0));
}
BENCHMARK(BM_EstimatorSetup)->Unit(benchmark::kMillisecond)->Iterations(1);
