#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

#include "phalcor/error.hpp"
#include "phalcor/room_sim.hpp"
#include "support.hpp"

using namespace phalcor;

namespace {

const Eigen::Vector3d kSource{2.1, 1.7, 1.3};
const Eigen::Vector3d kReceiver{3.6, 2.4, 1.6};

struct Image {
  double delay;
  double amplitude;
  Eigen::Vector3d position;
  int order;
};

// Mirror-image enumeration written out per axis: image coordinate
// (1 - 2q) s + 2 m L, with |m - q| hits on the near wall and |m| on the far one.
std::vector<Image> brute_images(const Eigen::Vector3d& dims, double coeff, const Eigen::Vector3d& s,
                                const Eigen::Vector3d& r, double max_delay) {
  const double d0 = (s - r).norm();
  std::vector<Image> out;
  const int n = 8;
  for (int mx = -n; mx <= n; ++mx)
    for (int my = -n; my <= n; ++my)
      for (int mz = -n; mz <= n; ++mz)
        for (int q = 0; q < 8; ++q) {
          const int m[3] = {mx, my, mz};
          Eigen::Vector3d p;
          int order = 0;
          for (int a = 0; a < 3; ++a) {
            const int qa = (q >> a) & 1;
            p[a] = (1 - 2 * qa) * s[a] + 2.0 * m[a] * dims[a];
            order += std::abs(m[a] - qa) + std::abs(m[a]);
          }
          if (order == 0) continue;
          const double d = (p - r).norm();
          const double delay = (d - d0) / kSpeedOfSound;
          if (delay <= max_delay) out.push_back({delay, std::pow(coeff, order) * d0 / d, p, order});
        }
  std::sort(out.begin(), out.end(), [](const Image& a, const Image& b) { return a.delay < b.delay; });
  return out;
}

ImpulseResponse noise_decay(double t60, double fs, double seconds, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  const double alpha = std::log(1e3) / t60;
  ImpulseResponse h;
  h.fs = fs;
  h.samples.resize(static_cast<std::size_t>(seconds * fs));
  for (std::size_t i = 0; i < h.samples.size(); ++i) h.samples[i] = std::exp(-alpha * i / fs) * g(rng);
  return h;
}

}  // namespace

TEST_CASE("direct sound is normalized") {
  const auto room = RoomSpec::uniform({6, 4, 3}, 0.8);
  const auto refs = image_sources(room, kSource, kReceiver, 0.02);
  CHECK(refs.direct.delay == 0.0);
  CHECK(refs.direct.amplitude == 1.0);
  CHECK(refs.direct.order == 0);
  CHECK(angular_distance(refs.direct.doa, Direction::from_vector(kSource - kReceiver)) < 1e-12);
  CHECK(refs.direct_distance == doctest::Approx((kSource - kReceiver).norm()));
}

TEST_CASE("six first-order images") {
  const auto room = RoomSpec::uniform({6, 4, 3}, 0.8);
  const auto refs = image_sources(room, kSource, kReceiver, 0.2);
  const auto n1 = std::count_if(refs.reflections.begin(), refs.reflections.end(), [](const Reflection& r) { return r.order == 1; });
  CHECK(n1 == 6);
}

TEST_CASE("image sources match a brute-force mirror enumeration") {
  const Eigen::Vector3d dims{6, 4, 3};
  const double coeff = 0.83;
  const auto refs = image_sources(RoomSpec::uniform(dims, coeff), kSource, kReceiver, 0.03);
  const auto oracle = brute_images(dims, coeff, kSource, kReceiver, 0.03);
  REQUIRE(refs.reflections.size() == oracle.size());
  for (std::size_t i = 0; i < oracle.size(); ++i) {
    const auto& r = refs.reflections[i];
    CHECK(r.delay == doctest::Approx(oracle[i].delay).epsilon(1e-12));
    CHECK(r.amplitude == doctest::Approx(oracle[i].amplitude).epsilon(1e-12));
  }
  // directions point from the receiver to the image
  std::multimap<long long, const Image*> by_delay;
  for (const auto& o : oracle) by_delay.emplace(std::llround(o.delay * 1e12), &o);
  for (const auto& r : refs.reflections) {
    bool found = false;
    auto [lo, hi] = by_delay.equal_range(std::llround(r.delay * 1e12));
    for (auto it = lo; it != hi; ++it)
      if (angular_distance(r.doa, Direction::from_vector(it->second->position - kReceiver)) < 1e-9 &&
          r.order == it->second->order)
        found = true;
    CHECK(found);
  }
}

TEST_CASE("image source output is sorted and amplitudes follow R^order d0/d") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 10; ++t) {
    const Eigen::Vector3d dims{4 + 6 * u(rng), 3 + 5 * u(rng), 2.5 + 2 * u(rng)};
    const double coeff = 0.5 + 0.45 * u(rng);
    const Eigen::Vector3d s = (dims.array() * Eigen::Array3d(0.1 + 0.8 * u(rng), 0.1 + 0.8 * u(rng), 0.1 + 0.8 * u(rng))).matrix();
    const Eigen::Vector3d r = (dims.array() * Eigen::Array3d(0.1 + 0.8 * u(rng), 0.1 + 0.8 * u(rng), 0.1 + 0.8 * u(rng))).matrix();
    const auto refs = image_sources(RoomSpec::uniform(dims, coeff), s, r, 0.025);
    const double d0 = (s - r).norm();
    for (std::size_t i = 0; i < refs.reflections.size(); ++i) {
      const auto& x = refs.reflections[i];
      if (i > 0) CHECK(refs.reflections[i - 1].delay <= x.delay);
      CHECK(x.delay >= 0.0);
      CHECK(x.delay <= 0.025);
      const double d = d0 + kSpeedOfSound * x.delay;
      CHECK(x.amplitude == doctest::Approx(std::pow(coeff, x.order) * d0 / d).epsilon(1e-9));
    }
  }
}

TEST_CASE("image source geometry errors") {
  const auto room = RoomSpec::uniform({6, 4, 3}, 0.8);
  CHECK_THROWS_AS(image_sources(room, kSource, kSource, 0.02), GeometryError);
  CHECK_THROWS_AS(image_sources(room, {7, 1, 1}, kReceiver, 0.02), GeometryError);
  CHECK_THROWS_AS(RoomSpec::uniform({6, -4, 3}, 0.5).validate(), ConfigError);
  CHECK_THROWS_AS(RoomSpec::uniform({6, 4, 3}, 1.0).validate(), ConfigError);
}

TEST_CASE("Sabine calibration") {
  const auto room = RoomSpec::uniform({10, 7, 4}, 0.0);
  const double expected = std::sqrt(1.0 - 0.161 * 280.0 / (276.0 * 0.99));
  CHECK(calibrate_reflection_coeff(room, 0.99) == doctest::Approx(expected).epsilon(1e-12));
  CHECK(calibrate_reflection_coeff(room, 0.99) == doctest::Approx(0.914).epsilon(1e-3));
  const double slow = calibrate_reflection_coeff(room, 1e6);
  CHECK(slow < 1.0);
  CHECK(slow > 0.99999);
  CHECK_THROWS_AS(calibrate_reflection_coeff(RoomSpec::uniform({1, 1, 1}, 0.0), 0.01), InfeasibleTargetError);
  CHECK(calibrate_reflection_coeff(RoomSpec::uniform({1, 1, 1}, 0.0), 10.0) > 0.99);
  CHECK_THROWS_AS(calibrate_reflection_coeff(room, 0.0), ConfigError);
}

TEST_CASE("fitted calibration reproduces T60 through the Schroeder integral") {
  const auto bare = RoomSpec::uniform({9, 5, 3}, 0.0);
  const double fitted = fit_reflection_coeff(bare, 0.89);
  CHECK(fitted < calibrate_reflection_coeff(bare, 0.89));
  CHECK(fit_reflection_coeff(bare, 0.89) == fitted);
  const auto room = RoomSpec::uniform(bare.dims, fitted);
  const auto refs = image_sources(room, {2.2, 1.6, 1.3}, {3.5, 2.4, 1.7}, 1.1);
  CHECK(schroeder_t60(render_rir(refs, 16000.0, 1.1)) == doctest::Approx(0.89).epsilon(0.15));
  CHECK(reflection_coeff_for(bare, 0.89, Calibration::Sabine) == calibrate_reflection_coeff(bare, 0.89));
  CHECK(reflection_coeff_for(bare, 0.89, Calibration::Schroeder) == fitted);
  CHECK(calibration_from_string(to_string(Calibration::Sabine)) == Calibration::Sabine);
  CHECK_THROWS_AS(calibration_from_string("eyring"), ConfigError);
}

TEST_CASE("reference rooms") {
  const auto& rooms = reference_rooms();
  REQUIRE(rooms.size() == 4);
  CHECK(rooms[0].dims == Eigen::Vector3d(12, 9, 5));
  CHECK(rooms[0].t60 == 1.22);
  CHECK(rooms[3].dims == Eigen::Vector3d(6, 4, 3));
  CHECK(rooms[3].mean_reflections_20ms == 25.6);
  CHECK(reference_room(2).t60 == 0.99);
  CHECK_THROWS_AS(reference_room(5), ConfigError);
}

TEST_CASE("render places nearest-sample deltas") {
  ReflectionSet refs;
  refs.reflections.push_back({1e-3, 0.5, {}, 1});
  const auto h = render_rir(refs, 16000.0, 0.01);
  REQUIRE(h.samples.size() == 160);
  CHECK(h.samples[0] == 1.0);
  CHECK(h.samples[16] == 0.5);
  for (std::size_t i = 0; i < h.samples.size(); ++i)
    if (i != 0 && i != 16) CHECK(h.samples[i] == 0.0);
  CHECK_FALSE(h.truncated);

  const auto direct = render_rir(ReflectionSet{}, 16000.0, 0.005);
  CHECK(direct.samples[0] == 1.0);
  CHECK(direct.energy() == 1.0);

  refs.reflections.push_back({0.02, 0.3, {}, 1});
  CHECK(render_rir(refs, 16000.0, 0.01).truncated);
}

TEST_CASE("render energy equals the sum of squared amplitudes") {
  ReflectionSet spread;
  double sum = 1.0;
  for (std::size_t i = 0; i < 40; ++i) {
    const double a = 0.9 / (1.0 + i);
    spread.reflections.push_back({(i + 1) * 4.0 / 16000.0, a, {}, 1});
    sum += a * a;
  }
  CHECK(render_rir(spread, 16000.0, 0.02).energy() == doctest::Approx(sum).epsilon(1e-12));
}

TEST_CASE("Schroeder T60 of an exponential decay") {
  for (double t60 : {0.3, 0.5, 1.0}) {
    const auto h = noise_decay(t60, 16000.0, 1.5 * t60, 11);
    CHECK(schroeder_t60(h) == doctest::Approx(t60).epsilon(0.10));
  }
  const auto delta = render_rir(ReflectionSet{}, 16000.0, 0.1);
  CHECK_THROWS_AS(schroeder_t60(delta), InsufficientDecayError);
}

TEST_CASE("energy decay curve starts at 0 dB and never increases") {
  const auto h = noise_decay(0.4, 16000.0, 0.6, 5);
  const auto edc = energy_decay_curve(h);
  CHECK(edc.front() == doctest::Approx(0.0));
  for (std::size_t i = 1; i < edc.size(); ++i) CHECK(edc[i] <= edc[i - 1] + 1e-12);
}

TEST_CASE("DRR") {
  ImpulseResponse h;
  h.fs = 1000.0;
  h.samples = {1.0, 0.0, 0.0, 0.0, 0.5, 0.5, 0.5, 0.5};
  CHECK(drr(h, 0.004) == doctest::Approx(0.0));
  auto scaled = h;
  for (auto& x : scaled.samples) x *= 3.7;
  CHECK(drr(scaled, 0.004) == doctest::Approx(drr(h, 0.004)));
  ImpulseResponse only;
  only.fs = 1000.0;
  only.samples = {1.0, 0.0};
  CHECK(std::isinf(drr(only, 0.001)));
  CHECK_THROWS_AS(drr(h, 0.0), ConfigError);
}

TEST_CASE("DRR of an exponential decay matches the geometric sums") {
  const double fs = 16000.0, alpha = 30.0, window = 2.5e-3;
  ImpulseResponse h;
  h.fs = fs;
  const std::size_t n = 16000;
  for (std::size_t i = 0; i < n; ++i) h.samples.push_back(std::exp(-alpha * i / fs));
  const double r = std::exp(-2 * alpha / fs);
  const std::size_t split = 40;
  const double direct = (1 - std::pow(r, split)) / (1 - r);
  const double reverb = (std::pow(r, split) - std::pow(r, n)) / (1 - r);
  CHECK(drr(h, window) == doctest::Approx(10 * std::log10(direct / reverb)).epsilon(1e-9));
  // continuous-time closed form
  const double cont = 10 * std::log10((1 - std::exp(-2 * alpha * window)) / (std::exp(-2 * alpha * window) - std::exp(-2 * alpha)));
  CHECK(std::abs(drr(h, window) - cont) < 0.1);
}

TEST_CASE("array pressure of a direct-only scene") {
  const auto array = em32_like();
  ReflectionSet refs;
  refs.direct.doa = Direction{1.1, 0.4};
  const std::vector<double> freqs{250.0, 1000.0, 3000.0};
  const std::vector<cplx> spectrum{{1.0, 0.5}, {-0.3, 2.0}, {0.7, -0.1}};
  const auto p = simulate_array_pressure(array, refs, freqs, spectrum, 0.0, 1);
  for (std::size_t f = 0; f < freqs.size(); ++f)
    CHECK((p.col(static_cast<Eigen::Index>(f)) - steering_vector(array, freqs[f], refs.direct.doa) * spectrum[f]).norm() < 1e-12);
}

TEST_CASE("array pressure matches the per-bin summation") {
  const auto array = em32_like();
  ReflectionSet refs;
  refs.direct.doa = Direction{1.2, -0.5};
  refs.reflections = {{1.3e-3, 0.6, {0.5, 2.0}, 1}, {4.1e-3, 0.45, {2.2, 1.0}, 1}, {7.7e-3, 0.3, {1.5, -2.5}, 2}};
  std::vector<double> freqs;
  std::vector<cplx> spectrum;
  for (int i = 0; i < 40; ++i) {
    freqs.push_back(100.0 + 123.0 * i);
    spectrum.push_back(std::polar(1.0 + 0.1 * i, 0.3 * i));
  }
  const auto p = simulate_array_pressure(array, refs, freqs, spectrum, 0.0, 1);
  for (std::size_t f = 0; f < freqs.size(); ++f) {
    Eigen::VectorXcd expected = steering_vector(array, freqs[f], refs.direct.doa);
    for (const auto& r : refs.reflections)
      expected += steering_vector(array, freqs[f], r.doa) * r.amplitude * std::exp(cplx(0, -2 * kPi * freqs[f] * r.delay));
    expected *= spectrum[f];
    CHECK((p.col(static_cast<Eigen::Index>(f)) - expected).norm() <= 1e-12 * expected.norm());
  }
}

TEST_CASE("array pressure noise is seeded") {
  const auto array = semicircular6();
  ReflectionSet refs;
  std::vector<double> freqs(500);
  std::vector<cplx> spectrum(500, cplx(1, 0));
  for (int i = 0; i < 500; ++i) freqs[static_cast<std::size_t>(i)] = 10.0 * i;
  const auto a = simulate_array_pressure(array, refs, freqs, spectrum, 0.1, 7);
  const auto b = simulate_array_pressure(array, refs, freqs, spectrum, 0.1, 7);
  const auto c = simulate_array_pressure(array, refs, freqs, spectrum, 0.1, 8);
  CHECK((a - b).norm() == 0.0);
  CHECK((a - c).norm() > 0.0);
  const auto clean = simulate_array_pressure(array, refs, freqs, spectrum, 0.0, 7);
  const double noise_rms = (a - clean).norm() / std::sqrt(static_cast<double>(a.size()));
  CHECK(noise_rms == doctest::Approx(0.1).epsilon(0.1));
}

TEST_CASE("time-domain render agrees with the frequency-domain model") {
  ArrayGeometry mic;
  mic.label = "single";
  mic.mic_positions = {Eigen::Vector3d::Zero()};
  const double fs = 16000.0;
  ReflectionSet refs;
  refs.reflections = {{5.0 / fs, 0.7, {}, 1}, {23.0 / fs, 0.4, {}, 1}, {61.0 / fs, 0.25, {}, 2}};
  const auto h = render_rir(refs, fs, 128.0 / fs);
  const int n = 128;
  std::vector<cplx> spec(n / 2 + 1);
  for (int k = 0; k <= n / 2; ++k)
    for (int t = 0; t < n; ++t)
      spec[static_cast<std::size_t>(k)] += h.samples[static_cast<std::size_t>(t)] * std::exp(cplx(0, -2 * kPi * k * t / n));
  std::vector<double> freqs;
  for (int k = 0; k <= n / 2; ++k) freqs.push_back(k * fs / n);
  std::vector<cplx> ones(freqs.size(), cplx(1, 0));
  const auto p = simulate_array_pressure(mic, refs, freqs, ones, 0.0, 1);
  for (int k = 0; k <= n / 2; ++k) CHECK(std::abs(p(0, k) - spec[static_cast<std::size_t>(k)]) <= 1e-9 * std::abs(spec[static_cast<std::size_t>(k)]) + 1e-12);
}

TEST_CASE("placement sampler respects the clearance rules") {
  for (const auto& preset : reference_rooms()) {
    const auto room = RoomSpec::uniform(preset.dims, 0.5);
    std::mt19937_64 rng(static_cast<std::uint64_t>(preset.id));
    for (int i = 0; i < 200; ++i) {
      const auto p = sample_placement(room, rng);
      for (const auto& x : {p.source, p.array}) {
        CHECK(room.wall_clearance(x) >= 1.2 - 1e-12);
        CHECK(room.contains(x));
      }
      // each endpoint moves by at most 0.5 per axis
      const double d = (p.source - p.array).norm();
      CHECK(d <= 1.7 + 2 * 0.5 * std::sqrt(3.0) + 1e-12);
      CHECK(d > 0.0);
    }
  }
  std::mt19937_64 a(9), b(9);
  const auto room = RoomSpec::uniform({6, 4, 3}, 0.5);
  const auto pa = sample_placement(room, a), pb = sample_placement(room, b);
  CHECK(pa.source == pb.source);
  CHECK(pa.array == pb.array);
  std::mt19937_64 rng(1);
  CHECK_THROWS_AS(sample_placement(RoomSpec::uniform({2, 2, 2}, 0.5), rng), GeometryError);
}

TEST_CASE("speech-like source") {
  const auto a = speech_like_signal(16000.0, 3);
  const auto b = speech_like_signal(16000.0, 3);
  CHECK(a == b);
  CHECK(a.size() >= 2.5 * 16000);
  CHECK(a.size() <= 3.0 * 16000);
  double e = 0.0;
  for (double x : a) e += x * x;
  CHECK(e > 0.0);
  CHECK(speech_like_signal(16000.0, 4) != a);
}

TEST_CASE("scene synthesis is deterministic") {
  SceneConfig s;
  s.room = RoomSpec::uniform({6, 4, 3}, 0.7);
  s.source_pos = kSource;
  s.array_pos = kReceiver;
  s.array = semicircular6();
  s.noise_level = 0.01;
  s.seed = 5;
  s.max_delay = 0.03;
  const auto a = synthesize_scene(s), b = synthesize_scene(s);
  CHECK(a.mics.channels() == 6);
  CHECK((a.mics.data - b.mics.data).norm() == 0.0);
  CHECK(a.reflections.reflections.size() == b.reflections.reflections.size());
  s.seed = 6;
  CHECK((synthesize_scene(s).mics.data - a.mics.data).norm() > 0.0);
}
