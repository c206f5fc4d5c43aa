#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "phalcor/detector.hpp"

using namespace phalcor;

namespace {

Eigen::MatrixXcd random_psd(std::mt19937_64& rng, Eigen::Index q) {
  std::normal_distribution<double> g;
  Eigen::MatrixXcd a(q, q + 2);
  for (Eigen::Index i = 0; i < a.size(); ++i) a(i) = cplx(g(rng), g(rng));
  return a * a.adjoint();
}

}  // namespace

static void BM_PhaseAlignBatch(benchmark::State& state) {
  std::mt19937_64 rng(1);
  const auto bins = static_cast<std::size_t>(state.range(0));
  std::vector<Eigen::MatrixXcd> r;
  std::vector<double> offsets;
  for (std::size_t j = 0; j < bins; ++j) {
    r.push_back(random_psd(rng, 32));
    offsets.push_back(6.6667 * static_cast<double>(j));
  }
  const auto taus = DelayGrid{}.values();
  for (auto _ : state) benchmark::DoNotOptimize(phase_align_batch(r, offsets, taus));
}
BENCHMARK(BM_PhaseAlignBatch)->Arg(32)->Arg(300)->Unit(benchmark::kMillisecond);

static void BM_Rank1(benchmark::State& state) {
  std::mt19937_64 rng(2);
  const auto m = random_psd(rng, state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(rank1_approx(m));
}
BENCHMARK(BM_Rank1)->Arg(6)->Arg(32);

static void BM_Omp(benchmark::State& state) {
  const auto grid = make_direction_grid(900);
  const auto dict = make_dictionary(em32_like(), 3000.0, grid);
  const Eigen::VectorXcd u = dict.atoms.col(17) + 0.6 * dict.atoms.col(400) + 0.4 * dict.atoms.col(801);
  for (auto _ : state) benchmark::DoNotOptimize(omp_doa(u, dict, 0.63, static_cast<int>(state.range(0))));
}
BENCHMARK(BM_Omp)->Arg(1)->Arg(3)->Unit(benchmark::kMicrosecond);

static void BM_DirectMatch(benchmark::State& state) {
  const auto dict = make_dictionary(em32_like(), 3000.0, make_direction_grid(900));
  const Eigen::VectorXcd v = dict.normalized.col(123);
  for (auto _ : state) benchmark::DoNotOptimize(direct_sound_match(v, dict));
}
BENCHMARK(BM_DirectMatch)->Unit(benchmark::kMicrosecond);
