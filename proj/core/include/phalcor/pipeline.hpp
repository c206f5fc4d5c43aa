#pragma once

#include <map>
#include <string>
#include <vector>

#include "phalcor/clustering.hpp"
#include "phalcor/detector.hpp"
#include "phalcor/evaluation.hpp"
#include "phalcor/focusing.hpp"
#include "phalcor/room_sim.hpp"
#include "phalcor/stft_scm.hpp"

namespace phalcor {

struct PipelineConfig {
  StftParams stft;
  BandPlanParams bands;
  int frames_per_group = 8;
  int group_advance = 4;
  std::size_t grid_size = 900;
  std::string grid_scheme = "fibonacci";
  double focusing_rcond = 1e-6;
  std::string cache_dir;  // focusing operator cache; empty disables it
  DetectorConfig detector;
  ClusterConfig cluster;
  MatchConfig match;
  double truth_horizon = 20e-3;

  void validate() const;
};

/// Wall-clock seconds per named stage, in insertion order.
using StageTimings = std::vector<std::pair<std::string, double>>;

/// Everything that depends only on the array, the sampling rate and the
/// pipeline settings: band plan, grid, focusing operator and dictionaries.
class Estimator {
 public:
  Estimator(const ArrayGeometry& array, const PipelineConfig& cfg, double fs, double c = kSpeedOfSound);

  const ArrayGeometry& array() const { return array_; }
  const PipelineConfig& config() const { return cfg_; }
  const BandPlan& plan() const { return plan_; }
  const DirectionGrid& grid() const { return grid_; }
  const FocusingOperator& focusing() const { return focusing_; }
  const std::vector<SteeringDictionary>& dictionaries() const { return dicts_; }

  /// STFT, focusing, per-group SCMs, delay scan, direct-sound estimate,
  /// OMP extraction and duplicate suppression.
  Detections detect(const MultichannelSignal& signal, StageTimings* timings = nullptr) const;

  /// Clustering of the suppressed candidates under `cluster`.
  static EstimateSet estimate(const Detections& det, const ClusterConfig& cluster);

 private:
  ArrayGeometry array_;
  PipelineConfig cfg_;
  double fs_;
  BandPlan plan_;
  DirectionGrid grid_;
  FocusingOperator focusing_;
  std::vector<SteeringDictionary> dicts_;
};

struct SceneDetections {
  int index = 0;
  int room = 0;
  std::uint64_t seed = 0;
  double drr_db = 0.0;
  ReflectionSet truth;  // reflections within the truth horizon
  Detections detections;
};

struct SceneEvaluation {
  EstimateSet estimates;
  Matching matching;
  MetricsRow metrics;
};

SceneDetections detect_scene(const SceneConfig& scene, const Estimator& estimator, StageTimings* timings = nullptr);

SceneEvaluation evaluate_detections(const SceneDetections& scene, const ClusterConfig& cluster,
                                    const MatchConfig& match);

struct SceneRun {
  SceneDetections detections;
  SceneEvaluation evaluation;
};

SceneRun run_scene(const SceneConfig& scene, const Estimator& estimator);

}  // namespace phalcor
