#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "phalcor/array_model.hpp"

namespace phalcor {

/// Shoebox room. Wall order: x=0, x=Lx, y=0, y=Ly, z=0, z=Lz.
struct RoomSpec {
  Eigen::Vector3d dims{1.0, 1.0, 1.0};
  std::array<double, 6> wall_coeffs{0, 0, 0, 0, 0, 0};
  double c = kSpeedOfSound;

  static RoomSpec uniform(const Eigen::Vector3d& dims, double reflection_coeff,
                          double c = kSpeedOfSound);

  double volume() const { return dims.prod(); }
  double surface() const {
    return 2.0 * (dims.x() * dims.y() + dims.x() * dims.z() + dims.y() * dims.z());
  }
  bool contains(const Eigen::Vector3d& p) const;
  double wall_clearance(const Eigen::Vector3d& p) const;
  void validate() const;
};

/// One of the four reference rooms used by the Monte Carlo campaign.
struct RoomPreset {
  int id;
  Eigen::Vector3d dims;
  double t60;
  double mean_reflections_20ms;
};

const std::vector<RoomPreset>& reference_rooms();
const RoomPreset& reference_room(int id);

struct Reflection {
  double delay = 0.0;      // seconds after the direct sound
  double amplitude = 1.0;  // relative to the direct sound
  Direction doa;
  int order = 0;
};

struct ReflectionSet {
  Reflection direct;
  std::vector<Reflection> reflections;  // ascending delay
  double direct_distance = 0.0;         // meters; 0 when unknown

  /// Copy keeping only reflections with delay <= max_delay.
  ReflectionSet truncated(double max_delay) const;
  /// Direct followed by reflections.
  std::vector<Reflection> all() const;
};

/// Allen-Berkley image sources up to `max_delay` after the direct sound.
/// amplitude_k = (product of wall coefficients) * d_0 / d_k.
ReflectionSet image_sources(const RoomSpec& room, const Eigen::Vector3d& source,
                            const Eigen::Vector3d& receiver, double max_delay);

/// Uniform reflection coefficient reproducing `target_t60` by Sabine inversion.
double calibrate_reflection_coeff(const RoomSpec& room, double target_t60);

/// Uniform coefficient whose image-source response has a Schroeder T60 within
/// 1% of `target_t60`, iterated from the Sabine value. Sabine overestimates
/// the coefficient for shoeboxes: grazing and axial paths decay slower than a
/// diffuse field. Measured at a fixed placement near the room center; cached.
double fit_reflection_coeff(const RoomSpec& room, double target_t60, double fs = 16000.0);

enum class Calibration { Sabine, Schroeder };

std::string_view to_string(Calibration method);
/// "sabine" or "schroeder".
Calibration calibration_from_string(std::string_view name);

double reflection_coeff_for(const RoomSpec& room, double target_t60, Calibration method, double fs = 16000.0);

struct ImpulseResponse {
  std::vector<double> samples;
  double fs = 16000.0;
  bool truncated = false;  // some reflection fell beyond the rendered length

  double energy() const;
};

/// Nearest-sample rendering of amplitude * delta(t - delay).
ImpulseResponse render_rir(const ReflectionSet& refs, double fs, double length);

/// Backward-integrated energy decay curve, in dB relative to the total energy.
std::vector<double> energy_decay_curve(const ImpulseResponse& rir);

/// T60 extrapolated from the least-squares slope of the decay curve between
/// -5 and -25 dB.
double schroeder_t60(const ImpulseResponse& rir);

/// 10 log10(E[0, window) / E[window, end)); +inf when no energy follows the
/// direct window.
double drr(const ImpulseResponse& rir, double direct_window);

/// Multichannel pressure p(f) = sum_k h(f, doa_k) a_k e^{-i 2 pi f tau_k} S(f) + n(f)
/// at the given frequencies. Returns Q x F. Noise is white complex Gaussian with
/// standard deviation noise_level * rms(S).
Eigen::MatrixXcd simulate_array_pressure(const ArrayGeometry& array, const ReflectionSet& refs,
                                         std::span<const double> frequencies,
                                         std::span<const cplx> source_spectrum,
                                         double noise_level, std::uint64_t seed,
                                         double c = kSpeedOfSound);

struct PlacementRules {
  double clearance = 1.2;
  double min_distance = 0.7;
  double max_distance = 1.7;
  double perturbation = 0.5;  // each coordinate moves by U[-p, p]
  int max_attempts = 1000;
};

struct Placement {
  Eigen::Vector3d source;
  Eigen::Vector3d array;
};

/// Random source/array positions: both keep `clearance` from every wall,
/// source-array distance in [min, max] before an independent per-axis
/// perturbation; perturbations violating the clearance are redrawn.
Placement sample_placement(const RoomSpec& room, std::mt19937_64& rng,
                           const PlacementRules& rules = {});

struct SourceSpec {
  std::string generator = "speech-like";  // or "wav"
  std::string wav_path;
  double min_seconds = 2.5;
  double max_seconds = 3.0;
};

struct SceneConfig {
  int room_preset = 0;  // 1..4 for reference rooms, 0 for custom dims
  RoomSpec room;
  double target_t60 = 0.0;  // informational; room.wall_coeffs hold the calibrated value
  Eigen::Vector3d source_pos{1.0, 1.0, 1.0};
  Eigen::Vector3d array_pos{2.0, 2.0, 1.0};
  ArrayGeometry array;
  SourceSpec source;
  double noise_level = 0.0;
  std::uint64_t seed = 0;
  double fs = 16000.0;
  double max_delay = 0.1;       // image sources included in the microphone signals
  double sim_max_freq = 6000.0; // simulation bandwidth
};

/// Time-domain multichannel signal, channels x samples.
struct MultichannelSignal {
  double fs = 16000.0;
  Eigen::MatrixXd data;

  Eigen::Index channels() const { return data.rows(); }
  Eigen::Index samples() const { return data.cols(); }
};

/// Pink noise with 4 Hz Hann-shaped amplitude modulation; deterministic in seed.
std::vector<double> speech_like_signal(double fs, std::uint64_t seed, double min_seconds = 2.5,
                                       double max_seconds = 3.0,
                                       double max_frequency = 6000.0);

std::vector<double> load_source_signal(const SourceSpec& spec, double fs, std::uint64_t seed,
                                       double max_frequency);

struct SceneSignals {
  MultichannelSignal mics;
  ReflectionSet reflections;  // everything simulated (up to max_delay)
};

/// Renders the microphone signals of a scene. Pure in (scene, seed).
SceneSignals synthesize_scene(const SceneConfig& scene);

/// Microphone signals for an explicit reflection set; the room only supplies c.
MultichannelSignal render_array_signal(const SceneConfig& scene, const ReflectionSet& refs);

}  // namespace phalcor
