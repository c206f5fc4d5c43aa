#include <benchmark/benchmark.h>

#include "phalcor/room_sim.hpp"

using namespace phalcor;

static void BM_ImageSources(benchmark::State& state) {
  const auto room = RoomSpec::uniform({9, 5, 3}, 0.88);
  const double max_delay = static_cast<double>(state.range(0)) * 1e-3;
  std::size_t n = 0;
  for (auto _ : state) {
    const auto refs = image_sources(room, {3.1, 2.2, 1.4}, {4.2, 2.9, 1.6}, max_delay);
    n = refs.reflections.size();
    benchmark::DoNotOptimize(n);
  }
  state.counters["images"] = static_cast<double>(n);
}
BENCHMARK(BM_ImageSources)->Arg(20)->Arg(100)->Arg(500)->Unit(benchmark::kMillisecond);

static void BM_SchroederT60(benchmark::State& state) {
  const auto room = RoomSpec::uniform({9, 5, 3}, 0.88);
  const auto rir = render_rir(image_sources(room, {3.1, 2.2, 1.4}, {4.2, 2.9, 1.6}, 1.0), 16000.0, 1.0);
  for (auto _ : state) benchmark::DoNotOptimize(schroeder_t60(rir));
}
BENCHMARK(BM_SchroederT60)->Unit(benchmark::kMicrosecond);

static void BM_ArraySignal(benchmark::State& state) {
  SceneConfig scene;
  scene.array = state.range(0) ? em32_like() : semicircular6();
  scene.room = RoomSpec::uniform({6, 4, 3}, 0.87);
  scene.source_pos = {2.0, 1.5, 1.4};
  scene.array_pos = {3.3, 2.1, 1.5};
  scene.max_delay = 0.02;
  const auto refs = image_sources(scene.room, scene.source_pos, scene.array_pos, scene.max_delay);
  for (auto _ : state) benchmark::DoNotOptimize(render_array_signal(scene, refs));
}
BENCHMARK(BM_ArraySignal)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
