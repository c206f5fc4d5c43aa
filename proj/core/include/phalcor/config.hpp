#pragma once

#include <cstdint>
#include <string>

#include "phalcor/campaign.hpp"
#include "phalcor/pipeline.hpp"
#include "phalcor/room_sim.hpp"
#include "phalcor/synth_rir.hpp"

namespace phalcor {

struct SceneSpec {
  int room_preset = 1;  // 1..4, or 0 for explicit dims
  Eigen::Vector3d dims{12.0, 9.0, 5.0};
  double t60 = 0.0;                // 0 uses the preset's T60
  double reflection_coeff = -1.0;  // >= 0 bypasses calibration
  Calibration calibration = Calibration::Schroeder;
  bool sample_positions = true;
  Eigen::Vector3d source_position{1.5, 1.5, 1.5};
  Eigen::Vector3d array_position{3.0, 3.0, 1.5};
  double noise_level = 0.0;
  double fs = 16000.0;
  double max_delay = 0.1;
  double sim_max_freq = 6000.0;
  SourceSpec source;
  PlacementRules placement;
};

struct ConfigBundle {
  std::uint64_t seed = 1;
  ArrayGeometry array = em32_like();
  SceneSpec scene;
  PipelineConfig pipeline;
  CampaignConfig campaign;
  SynthConfig synth;

  void validate() const;
};

/// Every default: the detector, clustering and matching values of the
/// reference study (rho_min 0.9, eps_u 0.63, Omega_th 10 deg, S_max 3,
/// gamma_Omega 15 deg, gamma_tau 0.3 ms, density 0.05, split 0.25).
ConfigBundle default_config();

/// Missing keys keep their defaults; unknown keys and out-of-range values
/// throw ConfigError naming the key path.
ConfigBundle parse_config(const std::string& json_text);
ConfigBundle load_config(const std::string& path);

std::string config_json(const ConfigBundle& bundle);
void save_config(const std::string& path, const ConfigBundle& bundle);

/// Hash of every effective parameter (worker count and cache location excluded).
std::uint64_t config_hash(const ConfigBundle& bundle);

bool operator==(const ConfigBundle& a, const ConfigBundle& b);

/// Seeds derived from the bundle seed are written into the sub-configs.
ConfigBundle with_seed(ConfigBundle bundle, std::uint64_t seed);

/// Scene of the bundle: calibrated room, fixed or sampled positions.
SceneConfig scene_from_config(const ConfigBundle& bundle);

/// The listening-test room: 12 x 7 x 5 m, T60 0.57 s, source at
/// (5.5, 1.2, 1.7), em32-like array at (3.5, 3, 1.7).
SceneConfig demo_scenario();

}  // namespace phalcor
