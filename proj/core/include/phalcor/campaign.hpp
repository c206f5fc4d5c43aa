#pragma once

#include <functional>
#include <string>
#include <vector>

#include "phalcor/evaluation.hpp"
#include "phalcor/pipeline.hpp"
#include "phalcor/room_sim.hpp"

namespace phalcor {

struct CampaignConfig {
  int n_scenes = 30;
  std::vector<int> rooms{1, 2, 3, 4};
  std::uint64_t seed = 1;
  double drr_min_db = -10.0;
  double drr_max_db = 10.0;
  double drr_window = 2.5e-3;   // direct-sound window of the DRR measure
  Calibration calibration = Calibration::Schroeder;
  int max_attempts = 50;
  double max_skip_fraction = 0.1;
  double noise_level = 0.0;
  double max_delay = 0.1;       // image sources in the microphone signals
  double fs = 16000.0;
  PlacementRules placement;
  SourceSpec source;
  int workers = 0;              // 0: PHALCOR_WORKERS or hardware concurrency

  void validate() const;
};

struct CampaignScene {
  int index = 0;
  bool skipped = false;
  std::string skip_reason;
  int attempts = 0;
  double drr_db = 0.0;
  SceneConfig scene;
};

/// Scene `index` drawn from seed ^ index: room uniformly from cfg.rooms,
/// placement per the sampler, redrawn until the DRR falls in range.
CampaignScene sample_campaign_scene(const CampaignConfig& cfg, const ArrayGeometry& array, int index);

/// DRR of the scene at the array center from image sources spanning the
/// room's reverberation time.
double scene_drr(const RoomSpec& room, const Eigen::Vector3d& source, const Eigen::Vector3d& receiver, double t60,
                 double fs, double window);

struct CampaignDetections {
  std::string array_label;
  std::vector<CampaignScene> scenes;
  std::vector<SceneDetections> detections;  // parallel to the non-skipped scenes
};

int resolve_workers(int requested);

using ProgressFn = std::function<void(int done, int total)>;

/// Samples and detects every scene. Throws CampaignError when more than
/// max_skip_fraction of the scenes cannot be generated.
CampaignDetections run_campaign_detections(const CampaignConfig& cfg, const Estimator& estimator,
                                           const ProgressFn& progress = {});

struct SceneReportRow {
  int scene = 0;
  int room = 0;
  std::uint64_t seed = 0;
  double drr_db = 0.0;
  MetricsRow metrics;
};

struct Aggregate {
  double mean_pd = 0.0, std_pd = 0.0;
  double mean_pfa = 0.0, std_pfa = 0.0;
  double mean_pm = 0.0, std_pm = 0.0;
  std::size_t scenes = 0;
};

struct MetricsReport {
  std::string array_label;
  std::string mode_label;
  bool subcluster = true;
  std::vector<SceneReportRow> rows;
  std::vector<ReflectionOutcome> reflections;
  std::vector<EstimateOutcome> estimates;
  std::vector<EstimateSet> scene_estimates;
  Aggregate aggregate;
  std::size_t skipped = 0;
};

Aggregate aggregate_rows(const std::vector<SceneReportRow>& rows);

/// Clusters and scores stored detections; `rooms` filters scenes when nonempty.
MetricsReport evaluate_campaign(const CampaignDetections& det, const ClusterConfig& cluster, const MatchConfig& match,
                                const std::vector<int>& rooms = {});

MetricsReport run_campaign(const CampaignConfig& cfg, const Estimator& estimator, const ProgressFn& progress = {});

std::vector<SceneMetrics> scene_metrics(const MetricsReport& report);

}  // namespace phalcor
