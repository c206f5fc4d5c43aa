#include <algorithm>
#include <cmath>
#include <random>

#include "fft.hpp"
#include "phalcor/error.hpp"
#include "phalcor/room_sim.hpp"
#include "phalcor/signal_io.hpp"

namespace phalcor {

std::vector<double> speech_like_signal(double fs, std::uint64_t seed, double min_seconds,
                                       double max_seconds, double max_frequency) {
  if (!(fs > 0.0) || !(min_seconds > 0.0) || max_seconds < min_seconds)
    throw ConfigError("invalid speech-like generator settings");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> duration(min_seconds, max_seconds);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto n = static_cast<std::size_t>(std::llround(duration(rng) * fs));
  n += n % 2;

  detail::RealFft fft(n);
  std::vector<cplx> spectrum(fft.bins());
  for (std::size_t b = 0; b < spectrum.size(); ++b) {
    const double f = static_cast<double>(b) * fs / static_cast<double>(n);
    const double re = normal(rng);
    const double im = normal(rng);
    if (f >= 50.0 && f <= max_frequency) spectrum[b] = cplx(re, im) / std::sqrt(f);
  }
  std::vector<double> x(n);
  fft.inverse(spectrum, x);

  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / fs;
    x[i] *= 0.5 * (1.0 - std::cos(2.0 * kPi * 4.0 * t));
  }
  const double peak = std::max(1e-300, std::abs(*std::max_element(
                                           x.begin(), x.end(), [](double a, double b) { return std::abs(a) < std::abs(b); })));
  for (auto& v : x) v *= 0.5 / peak;
  return x;
}

std::vector<double> load_source_signal(const SourceSpec& spec, double fs, std::uint64_t seed,
                                       double max_frequency) {
  if (spec.generator == "speech-like")
    return speech_like_signal(fs, seed, spec.min_seconds, spec.max_seconds, max_frequency);
  if (spec.generator == "wav") {
    const auto s = read_signal(spec.wav_path);
    if (std::abs(s.fs - fs) > 1e-6)
      throw ConfigError("source file " + spec.wav_path + " has fs " + std::to_string(s.fs) +
                        ", expected " + std::to_string(fs));
    if (s.channels() < 1 || s.samples() < 1) throw IoError(spec.wav_path + ": empty signal");
    std::vector<double> x(static_cast<std::size_t>(s.samples()));
    for (Eigen::Index t = 0; t < s.samples(); ++t) x[static_cast<std::size_t>(t)] = s.data(0, t);
    return x;
  }
  throw ConfigError("source.generator: unknown generator '" + spec.generator + "'");
}

}  // namespace phalcor
