#include "phalcor/pipeline.hpp"

#include <chrono>

#include "phalcor/error.hpp"

namespace phalcor {
namespace {

class StageClock {
 public:
  explicit StageClock(StageTimings* out) : out_(out), start_(std::chrono::steady_clock::now()) {}
  void lap(const char* name) {
    const auto now = std::chrono::steady_clock::now();
    if (out_) out_->emplace_back(name, std::chrono::duration<double>(now - start_).count());
    start_ = now;
  }

 private:
  StageTimings* out_;
  std::chrono::steady_clock::time_point start_;
};

}  // namespace

void PipelineConfig::validate() const {
  if (frames_per_group < 1) throw ConfigError("scm.frames_per_group must be >= 1");
  if (group_advance < 1) throw ConfigError("scm.advance must be >= 1");
  if (grid_size < 1) throw ConfigError("grid.size must be >= 1");
  if (!(focusing_rcond > 0.0 && focusing_rcond < 1.0)) throw ConfigError("focusing.rcond must lie in (0, 1)");
  if (!(truth_horizon > 0.0)) throw ConfigError("evaluation.truth_horizon must be positive");
  detector.validate();
  cluster.validate();
  match.validate();
}

Estimator::Estimator(const ArrayGeometry& array, const PipelineConfig& cfg, double fs, double c)
    : array_(array), cfg_(cfg), fs_(fs) {
  cfg_.validate();
  array_.validate();
  const auto window = static_cast<int>(std::lround(cfg_.stft.window_seconds * fs));
  if (window < 2) throw ConfigError("stft.window_seconds is too short for fs");
  plan_ = band_plan(cfg_.bands, fs / window);
  grid_ = make_direction_grid(cfg_.grid_size, cfg_.grid_scheme);
  focusing_ = cached_focusing_operator(cfg_.cache_dir, array_, plan_, grid_, cfg_.focusing_rcond, c);
  for (const auto& b : plan_.bands) dicts_.push_back(make_dictionary(array_, b.center, grid_, c));
}

Detections Estimator::detect(const MultichannelSignal& signal, StageTimings* timings) const {
  if (signal.channels() != static_cast<Eigen::Index>(array_.size()))
    throw ConfigError("signal has " + std::to_string(signal.channels()) + " channels, array has " +
                      std::to_string(array_.size()));
  if (std::abs(signal.fs - fs_) > 1e-6) throw ConfigError("signal sampling rate differs from the estimator's");
  StageClock clock(timings);
  const auto tensor = stft(signal, cfg_.stft);
  clock.lap("stft");
  const auto groups = frame_groups(tensor.frames, cfg_.frames_per_group, cfg_.group_advance);
  DelayScan scan;
  for (std::size_t b = 0; b < plan_.bands.size(); ++b) {
    const auto focused = apply_focusing(focusing_.t[b], band_frames(tensor, plan_.bands[b]));
    const BandScanner scanner(plan_.bands[b], dicts_[b], cfg_.detector);
    for (std::size_t g = 0; g < groups.size(); ++g)
      scanner.scan({static_cast<int>(b), static_cast<int>(g), band_scms(focused, groups[g])}, scan);
  }
  clock.lap("scan");
  Detections d;
  d.observations = plan_.bands.size() * groups.size();
  d.direct = cfg_.detector.direct_doa ? *cfg_.detector.direct_doa : estimate_direct_doa(scan, dicts_, cfg_.detector);
  d.raw = extract_candidates(scan, dicts_, cfg_.detector, d.direct);
  d.candidates = suppress_duplicates(d.raw, cfg_.detector);
  clock.lap("extract");
  return d;
}

EstimateSet Estimator::estimate(const Detections& det, const ClusterConfig& cluster) {
  auto points = to_points(det.candidates);
  if (cluster.azimuth_only) points = collapse_to_azimuth(points);
  return finalize_estimates(cluster_points(points, cluster, det.observations), cluster.azimuth_only);
}

SceneDetections detect_scene(const SceneConfig& scene, const Estimator& estimator, StageTimings* timings) {
  StageClock clock(timings);
  const auto sig = synthesize_scene(scene);
  clock.lap("simulate");
  SceneDetections out;
  out.room = scene.room_preset;
  out.seed = scene.seed;
  out.truth = sig.reflections.truncated(estimator.config().truth_horizon);
  out.detections = estimator.detect(sig.mics, timings);
  return out;
}

SceneEvaluation evaluate_detections(const SceneDetections& scene, const ClusterConfig& cluster,
                                    const MatchConfig& match) {
  SceneEvaluation e;
  e.estimates = Estimator::estimate(scene.detections, cluster);
  e.matching = match_reflections(e.estimates, scene.truth.reflections, match);
  e.metrics = compute_metrics(e.matching);
  return e;
}

SceneRun run_scene(const SceneConfig& scene, const Estimator& estimator) {
  SceneRun r;
  r.detections = detect_scene(scene, estimator);
  r.evaluation = evaluate_detections(r.detections, estimator.config().cluster, estimator.config().match);
  return r;
}

}  // namespace phalcor
