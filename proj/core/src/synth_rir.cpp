#include "phalcor/synth_rir.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "phalcor/error.hpp"

namespace phalcor {

void SynthConfig::validate() const {
  if (!(volume > 0.0)) throw ConfigError("synth.volume must be positive");
  if (!(interval > 0.0)) throw ConfigError("synth.interval must be positive");
  if (!(horizon > interval)) throw ConfigError("synth.horizon must exceed the interval width");
  if (!(t60 > 0.0)) throw ConfigError("synth.t60 must be positive");
  if (!(c > 0.0)) throw ConfigError("synth.c must be positive");
  if (!(source_distance > 0.0)) throw ConfigError("synth.source_distance must be positive");
}

double expected_reflection_count(double t, double volume, double c) {
  const double r = c * t;
  return 4.0 * kPi * r * r * r / (3.0 * volume);
}

namespace {

int interval_count(const SynthConfig& cfg) {
  return static_cast<int>(std::ceil(cfg.horizon / cfg.interval - 1e-9));
}

}  // namespace

std::vector<int> reflection_count_profile(const SynthConfig& cfg) {
  cfg.validate();
  const int n = interval_count(cfg);
  std::vector<int> profile(static_cast<std::size_t>(n));
  double prev = 0.0;
  for (int i = 0; i < n; ++i) {
    const double t1 = std::min(cfg.horizon, (i + 1) * cfg.interval);
    const double cur = std::round(expected_reflection_count(t1, cfg.volume, cfg.c));
    profile[static_cast<std::size_t>(i)] = static_cast<int>(cur - prev);
    prev = cur;
  }
  return profile;
}

ReflectionSet synthesize_reflections(const std::vector<int>& profile, const SynthConfig& cfg) {
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> elevation(0.0, kPi);
  std::uniform_real_distribution<double> azimuth(-kPi, kPi);
  ReflectionSet out;
  out.direct.doa = cfg.direct_doa;
  for (std::size_t i = 0; i < profile.size(); ++i) {
    const int n = profile[i];
    for (int m = 0; m < n; ++m) {
      Reflection r;
      r.delay = static_cast<double>(i) * cfg.interval + (m + 0.5) * cfg.interval / n;
      const double el = elevation(rng);
      r.doa = {el, wrap_azimuth(azimuth(rng))};
      r.amplitude = 1.0;
      r.order = 1;
      out.reflections.push_back(r);
    }
  }
  return out;
}

double decay_rate(double t60) { return std::log(1e6) / t60; }

double interval_energy(int i, const SynthConfig& cfg) {
  const double alpha = decay_rate(cfg.t60);
  const double t_mid = (i + 0.5) * cfg.interval;
  if (cfg.anchoring == SynthAnchoring::Drr) {
    const double reverberant = std::pow(10.0, -cfg.drr_db / 10.0);
    return reverberant * (1.0 - std::exp(-alpha * cfg.interval)) * std::exp(-alpha * i * cfg.interval);
  }
  const double d0 = cfg.source_distance;
  return 4.0 * kPi * cfg.c * d0 * d0 * cfg.interval / cfg.volume * std::exp(-alpha * t_mid);
}

ReflectionSet fit_amplitudes(const ReflectionSet& refs, const SynthConfig& cfg, double direct_amplitude) {
  if (!(cfg.t60 > 0.0)) throw ConfigError("synth.t60 must be positive");
  ReflectionSet out = refs;
  out.direct.delay = 0.0;
  out.direct.amplitude = direct_amplitude;
  std::vector<int> index(out.reflections.size());
  std::vector<int> count;
  for (std::size_t k = 0; k < out.reflections.size(); ++k) {
    const double d = out.reflections[k].delay;
    const int i = std::max(0, static_cast<int>(std::ceil(d / cfg.interval - 1e-9)) - 1);
    index[k] = i;
    if (count.size() <= static_cast<std::size_t>(i)) count.resize(static_cast<std::size_t>(i) + 1, 0);
    count[static_cast<std::size_t>(i)] += 1;
  }
  for (std::size_t k = 0; k < out.reflections.size(); ++k) {
    const int i = index[k];
    out.reflections[k].amplitude = std::sqrt(interval_energy(i, cfg) / count[static_cast<std::size_t>(i)]);
  }
  return out;
}

ReflectionSet build_estimated_rir(const EstimateSet& estimates, const SynthConfig& cfg) {
  ReflectionSet refs;
  refs.direct.doa = cfg.direct_doa;
  for (const auto& e : estimates.reflections) {
    Reflection r;
    r.delay = e.delay;
    r.doa = e.doa;
    r.order = 1;
    refs.reflections.push_back(r);
  }
  std::stable_sort(refs.reflections.begin(), refs.reflections.end(),
                   [](const auto& a, const auto& b) { return a.delay < b.delay; });
  return fit_amplitudes(refs, cfg);
}

}  // namespace phalcor
