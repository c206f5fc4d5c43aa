#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "phalcor/clustering.hpp"
#include "phalcor/room_sim.hpp"

namespace phalcor {

enum class SynthAnchoring { Direct, Drr };

struct SynthConfig {
  double volume = 390.0;
  double t60 = 0.57;
  double interval = 1e-3;
  double horizon = 20e-3;
  double c = kSpeedOfSound;
  std::uint64_t seed = 1;
  Direction direct_doa;
  // Direct: interval energy 4 pi c d0^2 w / V * exp(-alpha t), the image-model
  // density for a source at d0. Drr: scaled so the full decay has drr_db.
  SynthAnchoring anchoring = SynthAnchoring::Direct;
  double source_distance = 1.0;
  double drr_db = 0.0;

  void validate() const;
};

/// 4 pi (c t)^3 / (3 V)
double expected_reflection_count(double t, double volume, double c = kSpeedOfSound);

/// Reflections per interval, round(N(t_{i+1})) - round(N(t_i)).
std::vector<int> reflection_count_profile(const SynthConfig& cfg);

/// N_i unit-amplitude reflections per interval at t_i + (m + 0.5) w / N_i with
/// elevation ~ U[0, pi] and azimuth ~ U(-pi, pi].
ReflectionSet synthesize_reflections(const std::vector<int>& profile, const SynthConfig& cfg);

/// Energy decay rate alpha = ln(10^6) / T60 of the interval-energy curve.
double decay_rate(double t60);

/// Expected energy of interval i before it is split among its reflections.
double interval_energy(int i, const SynthConfig& cfg);

/// Reflections sharing an interval get sqrt(E_i / N_i); the direct keeps
/// `direct_amplitude`.
ReflectionSet fit_amplitudes(const ReflectionSet& refs, const SynthConfig& cfg, double direct_amplitude = 1.0);

/// Estimated delays and directions with decay-fitted amplitudes.
ReflectionSet build_estimated_rir(const EstimateSet& estimates, const SynthConfig& cfg);

}  // namespace phalcor
