#include <doctest.h>

#include <cmath>
#include <numeric>

#include "phalcor/error.hpp"
#include "phalcor/synth_rir.hpp"

using namespace phalcor;

namespace {

double chi_square_uniform(const std::vector<double>& x, double lo, double hi, int bins) {
  std::vector<double> count(static_cast<std::size_t>(bins), 0.0);
  for (double v : x) {
    const int b = std::min(bins - 1, static_cast<int>((v - lo) / (hi - lo) * bins));
    count[static_cast<std::size_t>(b)] += 1.0;
  }
  const double expected = static_cast<double>(x.size()) / bins;
  double chi = 0.0;
  for (double c : count) chi += (c - expected) * (c - expected) / expected;
  return chi;
}

std::vector<double> interval_energies(const ReflectionSet& refs, const SynthConfig& cfg) {
  std::vector<double> e(static_cast<std::size_t>(std::ceil(cfg.horizon / cfg.interval - 1e-9)), 0.0);
  for (const auto& r : refs.reflections) {
    const auto i = static_cast<std::size_t>(std::floor(r.delay / cfg.interval));
    e[std::min(i, e.size() - 1)] += r.amplitude * r.amplitude;
  }
  return e;
}

}  // namespace

TEST_CASE("expected reflection count") {
  CHECK(expected_reflection_count(20e-3, 390.0) == doctest::Approx(3.47).epsilon(0.003));
  CHECK(expected_reflection_count(0.0, 390.0) == 0.0);
  CHECK(expected_reflection_count(40e-3, 390.0) == doctest::Approx(8.0 * expected_reflection_count(20e-3, 390.0)));
}

TEST_CASE("count profile") {
  SynthConfig cfg;
  const auto p = reflection_count_profile(cfg);
  CHECK(p.size() == 20);
  for (int n : p) CHECK(n >= 0);
  CHECK(std::accumulate(p.begin(), p.end(), 0) == static_cast<int>(std::round(expected_reflection_count(20e-3, 390.0))));
  cfg.horizon = 0.2;
  const auto long_p = reflection_count_profile(cfg);
  CHECK(std::accumulate(long_p.begin(), long_p.end(), 0) ==
        static_cast<int>(std::round(expected_reflection_count(0.2, 390.0))));
  // the density grows with t^2
  CHECK(std::accumulate(long_p.begin() + 150, long_p.end(), 0) > std::accumulate(long_p.begin() + 50, long_p.begin() + 100, 0));
}

TEST_CASE("reflections are spread evenly inside an interval") {
  SynthConfig cfg;
  const auto refs = synthesize_reflections({0, 0, 0, 0, 0, 2}, cfg);
  REQUIRE(refs.reflections.size() == 2);
  CHECK(refs.reflections[0].delay == doctest::Approx(5.25e-3));
  CHECK(refs.reflections[1].delay == doctest::Approx(5.75e-3));
  const auto three = synthesize_reflections({3}, cfg);
  CHECK(three.reflections[1].delay == doctest::Approx(0.5e-3));
}

TEST_CASE("synthesized directions are uniform in elevation and azimuth") {
  SynthConfig cfg;
  cfg.seed = 5;
  const auto refs = synthesize_reflections(std::vector<int>(100, 100), cfg);
  REQUIRE(refs.reflections.size() == 10000);
  std::vector<double> el, az;
  for (const auto& r : refs.reflections) {
    el.push_back(r.doa.elevation);
    az.push_back(r.doa.azimuth);
  }
  // 99th percentile of chi-square with 9 degrees of freedom
  CHECK(chi_square_uniform(el, 0.0, kPi, 10) < 21.67);
  CHECK(chi_square_uniform(az, -kPi, kPi, 10) < 21.67);
}

TEST_CASE("synthesis is seeded") {
  SynthConfig cfg;
  const auto a = synthesize_reflections({1, 2, 3}, cfg), b = synthesize_reflections({1, 2, 3}, cfg);
  cfg.seed = 2;
  const auto c = synthesize_reflections({1, 2, 3}, cfg);
  for (std::size_t i = 0; i < 6; ++i) CHECK(a.reflections[i].doa == b.reflections[i].doa);
  CHECK_FALSE(a.reflections[0].doa == c.reflections[0].doa);
}

TEST_CASE("amplitude split inside an interval") {
  SynthConfig cfg;
  const auto one = fit_amplitudes(synthesize_reflections({0, 0, 0, 1}, cfg), cfg);
  const auto two = fit_amplitudes(synthesize_reflections({0, 0, 0, 2}, cfg), cfg);
  CHECK(two.reflections[0].amplitude == doctest::Approx(one.reflections[0].amplitude / std::sqrt(2.0)));
  CHECK(two.reflections[1].amplitude == doctest::Approx(one.reflections[0].amplitude / std::sqrt(2.0)));
  CHECK(one.direct.amplitude == 1.0);
}

TEST_CASE("interval energy does not depend on how many reflections share it") {
  SynthConfig cfg;
  for (int n : {1, 2, 5, 17}) {
    std::vector<int> p(8, 0);
    p[7] = n;
    const auto refs = fit_amplitudes(synthesize_reflections(p, cfg), cfg);
    CHECK(interval_energies(refs, cfg)[7] == doctest::Approx(interval_energy(7, cfg)));
  }
}

TEST_CASE("interval energies decay at the rate set by T60") {
  SynthConfig cfg;
  cfg.horizon = 0.2;
  for (int i = 1; i < 100; ++i)
    CHECK(interval_energy(i, cfg) / interval_energy(i - 1, cfg) ==
          doctest::Approx(std::exp(-decay_rate(cfg.t60) * cfg.interval)));
  CHECK(decay_rate(0.5) == doctest::Approx(6.0 * std::log(10.0) / 0.5));
  cfg.t60 = 1e12;
  CHECK(interval_energy(150, cfg) == doctest::Approx(interval_energy(0, cfg)));
  CHECK(interval_energy(0, cfg) == doctest::Approx(4.0 * kPi * cfg.c * cfg.interval / cfg.volume));
}

TEST_CASE("decay fitted to a synthesized response recovers T60") {
  for (double t60 : {0.57, 0.8}) {
    SynthConfig cfg;
    cfg.horizon = 0.2;
    cfg.t60 = t60;
    const auto refs = fit_amplitudes(synthesize_reflections(reflection_count_profile(cfg), cfg), cfg, 0.0);
    const auto e = interval_energies(refs, cfg);
    double st = 0, sy = 0, stt = 0, sty = 0, n = 0;
    for (std::size_t i = 0; i < e.size(); ++i) {
      if (e[i] <= 0.0) continue;
      const double t = (static_cast<double>(i) + 0.5) * cfg.interval;
      const double y = 10.0 * std::log10(e[i]);
      st += t;
      sy += y;
      stt += t * t;
      sty += t * y;
      n += 1;
    }
    const double slope = (n * sty - st * sy) / (n * stt - st * st);
    CHECK(-60.0 / slope == doctest::Approx(t60).epsilon(0.15));
  }
}

TEST_CASE("Schroeder T60 of a synthesized response") {
  SynthConfig cfg;
  cfg.horizon = 0.2;
  cfg.t60 = 0.3;
  const auto refs = fit_amplitudes(synthesize_reflections(reflection_count_profile(cfg), cfg), cfg, 0.0);
  const auto rir = render_rir(refs, 16000.0, cfg.horizon);
  CHECK(schroeder_t60(rir) == doctest::Approx(0.3).epsilon(0.15));
}

TEST_CASE("DRR anchoring") {
  SynthConfig cfg;
  cfg.anchoring = SynthAnchoring::Drr;
  cfg.drr_db = 3.0;
  cfg.horizon = 50.0;
  double total = 0.0;
  for (int i = 0; i < 50000; ++i) total += interval_energy(i, cfg);
  CHECK(10.0 * std::log10(1.0 / total) == doctest::Approx(3.0).epsilon(1e-6));
}

TEST_CASE("estimated response keeps the estimated delays and directions") {
  SynthConfig cfg;
  cfg.direct_doa = {1.0, -0.5};
  EstimateSet est;
  est.reflections = {{7.3e-3, {2.0, 1.0}, 4}, {2.1e-3, {0.5, 2.0}, 9}};
  const auto rir = build_estimated_rir(est, cfg);
  REQUIRE(rir.reflections.size() == 2);
  CHECK(rir.reflections[0].delay == 2.1e-3);
  CHECK(rir.reflections[0].doa == est.reflections[1].doa);
  CHECK(rir.reflections[1].delay == 7.3e-3);
  CHECK(rir.direct.doa == cfg.direct_doa);
  CHECK(rir.direct.amplitude == 1.0);
  for (const auto& r : rir.reflections) CHECK(r.amplitude > 0.0);
  CHECK(rir.reflections[1].amplitude < rir.reflections[0].amplitude);

  const auto rendered = render_rir(rir, 16000.0, cfg.horizon + 5e-3);
  for (const auto& r : rir.reflections) {
    const auto k = static_cast<std::size_t>(std::llround(r.delay * 16000.0));
    double near = 0.0;
    for (std::size_t j = k - 1; j <= k + 1; ++j) near += std::abs(rendered.samples[j]);
    CHECK(near == doctest::Approx(r.amplitude));
  }
  CHECK(rendered.energy() == doctest::Approx(1.0 + rir.reflections[0].amplitude * rir.reflections[0].amplitude +
                                              rir.reflections[1].amplitude * rir.reflections[1].amplitude));

  const auto empty = build_estimated_rir(EstimateSet{}, cfg);
  CHECK(empty.reflections.empty());
  CHECK(empty.direct.amplitude == 1.0);
}

TEST_CASE("synth config validation") {
  SynthConfig cfg;
  cfg.volume = 0.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = {};
  cfg.horizon = cfg.interval / 2;
  CHECK_THROWS_AS(reflection_count_profile(cfg), ConfigError);
  cfg = {};
  cfg.t60 = 0.0;
  CHECK_THROWS_AS(fit_amplitudes({}, cfg), ConfigError);
}
