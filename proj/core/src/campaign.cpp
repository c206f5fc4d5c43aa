#include "phalcor/campaign.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <mutex>
#include <thread>

#include "phalcor/error.hpp"
#include "phalcor/hash.hpp"

namespace phalcor {

void CampaignConfig::validate() const {
  if (n_scenes < 1) throw ConfigError("campaign.n_scenes must be >= 1");
  if (rooms.empty()) throw ConfigError("campaign.rooms must not be empty");
  for (int r : rooms) reference_room(r);
  if (drr_max_db < drr_min_db) throw ConfigError("campaign: drr_max_db < drr_min_db");
  if (max_attempts < 1) throw ConfigError("campaign.max_attempts must be >= 1");
  if (!(max_skip_fraction >= 0.0 && max_skip_fraction <= 1.0)) throw ConfigError("campaign.max_skip_fraction must lie in [0, 1]");
  if (!(noise_level >= 0.0)) throw ConfigError("campaign.noise_level must be >= 0");
  if (!(max_delay > 0.0) || !(fs > 0.0) || !(drr_window > 0.0)) throw ConfigError("campaign: max_delay, fs and drr_window must be positive");
}

double scene_drr(const RoomSpec& room, const Eigen::Vector3d& source, const Eigen::Vector3d& receiver, double t60,
                 double fs, double window) {
  const auto refs = image_sources(room, source, receiver, t60);
  const auto rir = render_rir(refs, fs, t60 + 2.0 / fs);
  return drr(rir, window);
}

CampaignScene sample_campaign_scene(const CampaignConfig& cfg, const ArrayGeometry& array, int index) {
  CampaignScene out;
  out.index = index;
  const std::uint64_t scene_seed = cfg.seed ^ static_cast<std::uint64_t>(index);
  std::mt19937_64 rng(mix_seed(scene_seed));
  std::uniform_int_distribution<std::size_t> pick(0, cfg.rooms.size() - 1);
  const auto& preset = reference_room(cfg.rooms[pick(rng)]);
  const double coeff = reflection_coeff_for(RoomSpec::uniform(preset.dims, 0.0), preset.t60, cfg.calibration, cfg.fs);
  const auto room = RoomSpec::uniform(preset.dims, coeff);

  for (out.attempts = 1; out.attempts <= cfg.max_attempts; ++out.attempts) {
    Placement p;
    try {
      p = sample_placement(room, rng, cfg.placement);
    } catch (const GeometryError& e) {
      out.skip_reason = e.what();
      continue;
    }
    const double d = scene_drr(room, p.source, p.array, preset.t60, cfg.fs, cfg.drr_window);
    if (d < cfg.drr_min_db || d > cfg.drr_max_db) {
      out.skip_reason = "DRR " + std::to_string(d) + " dB outside range";
      continue;
    }
    out.drr_db = d;
    out.skip_reason.clear();
    auto& s = out.scene;
    s.room_preset = preset.id;
    s.room = room;
    s.target_t60 = preset.t60;
    s.source_pos = p.source;
    s.array_pos = p.array;
    s.array = array;
    s.source = cfg.source;
    s.noise_level = cfg.noise_level;
    s.seed = scene_seed;
    s.fs = cfg.fs;
    s.max_delay = cfg.max_delay;
    return out;
  }
  out.attempts = cfg.max_attempts;
  out.skipped = true;
  return out;
}

int resolve_workers(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("PHALCOR_WORKERS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

namespace {

template <typename Fn>
void parallel_for(int n, int workers, Fn&& fn) {
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mu;
  auto body = [&] {
    for (int i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(error_mu);
        if (!error) error = std::current_exception();
      }
    }
  };
  const int count = std::max(1, std::min(workers, n));
  if (count == 1) {
    body();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < count; ++w) pool.emplace_back(body);
    for (auto& t : pool) t.join();
  }
  if (error) std::rethrow_exception(error);
}

}  // namespace

CampaignDetections run_campaign_detections(const CampaignConfig& cfg, const Estimator& estimator,
                                           const ProgressFn& progress) {
  cfg.validate();
  CampaignDetections out;
  out.array_label = estimator.array().label;
  out.scenes.resize(static_cast<std::size_t>(cfg.n_scenes));
  std::vector<SceneDetections> det(static_cast<std::size_t>(cfg.n_scenes));
  std::atomic<int> done{0};
  std::mutex progress_mu;
  parallel_for(cfg.n_scenes, resolve_workers(cfg.workers), [&](int i) {
    auto s = sample_campaign_scene(cfg, estimator.array(), i);
    if (!s.skipped) {
      auto d = detect_scene(s.scene, estimator);
      d.index = i;
      d.drr_db = s.drr_db;
      det[static_cast<std::size_t>(i)] = std::move(d);
    }
    out.scenes[static_cast<std::size_t>(i)] = std::move(s);
    const int n = ++done;
    if (progress) {
      std::lock_guard lock(progress_mu);
      progress(n, cfg.n_scenes);
    }
  });
  std::size_t skipped = 0;
  for (std::size_t i = 0; i < out.scenes.size(); ++i) {
    if (out.scenes[i].skipped)
      ++skipped;
    else
      out.detections.push_back(std::move(det[i]));
  }
  if (static_cast<double>(skipped) > cfg.max_skip_fraction * cfg.n_scenes)
    throw CampaignError(std::to_string(skipped) + " of " + std::to_string(cfg.n_scenes) +
                        " scenes could not be generated");
  return out;
}

Aggregate aggregate_rows(const std::vector<SceneReportRow>& rows) {
  Aggregate a;
  std::vector<double> pd, pfa, pm;
  for (const auto& r : rows) {
    if (r.metrics.p_d_defined) {
      pd.push_back(r.metrics.p_d);
      pm.push_back(r.metrics.p_m);
    }
    pfa.push_back(r.metrics.p_fa);
  }
  auto stats = [](const std::vector<double>& v, double& mean, double& sd) {
    mean = sd = 0.0;
    if (v.empty()) return;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    for (double x : v) sd += (x - mean) * (x - mean);
    sd = v.size() > 1 ? std::sqrt(sd / static_cast<double>(v.size() - 1)) : 0.0;
  };
  stats(pd, a.mean_pd, a.std_pd);
  stats(pfa, a.mean_pfa, a.std_pfa);
  stats(pm, a.mean_pm, a.std_pm);
  a.scenes = rows.size();
  return a;
}

MetricsReport evaluate_campaign(const CampaignDetections& det, const ClusterConfig& cluster, const MatchConfig& match,
                                const std::vector<int>& rooms) {
  MetricsReport rep;
  rep.array_label = det.array_label;
  rep.mode_label = std::string(to_string(match.mode));
  rep.subcluster = cluster.subcluster;
  for (const auto& s : det.scenes) rep.skipped += s.skipped ? 1 : 0;
  for (const auto& d : det.detections) {
    if (!rooms.empty() && std::find(rooms.begin(), rooms.end(), d.room) == rooms.end()) continue;
    auto e = evaluate_detections(d, cluster, match);
    rep.rows.push_back({d.index, d.room, d.seed, d.drr_db, e.metrics});
    classify_outcomes(d.index, e.estimates, d.truth.reflections, e.matching, match, rep.reflections, rep.estimates);
    rep.scene_estimates.push_back(std::move(e.estimates));
  }
  rep.aggregate = aggregate_rows(rep.rows);
  return rep;
}

MetricsReport run_campaign(const CampaignConfig& cfg, const Estimator& estimator, const ProgressFn& progress) {
  const auto det = run_campaign_detections(cfg, estimator, progress);
  return evaluate_campaign(det, estimator.config().cluster, estimator.config().match);
}

std::vector<SceneMetrics> scene_metrics(const MetricsReport& report) {
  std::vector<SceneMetrics> out;
  for (const auto& r : report.rows) out.push_back({r.scene, r.metrics});
  return out;
}

}  // namespace phalcor
