#include "phalcor/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>

#include "phalcor/error.hpp"

namespace phalcor {

std::string_view to_string(MatchMode mode) {
  switch (mode) {
    case MatchMode::Full: return "full";
    case MatchMode::AzimuthOnly: return "azimuth-only";
    case MatchMode::MirrorCorrected: return "mirror-corrected";
  }
  return "full";
}

MatchMode match_mode_from_string(std::string_view name) {
  if (name == "full") return MatchMode::Full;
  if (name == "azimuth-only") return MatchMode::AzimuthOnly;
  if (name == "mirror-corrected") return MatchMode::MirrorCorrected;
  throw ConfigError("unknown match mode '" + std::string(name) + "'");
}

void MatchConfig::validate() const {
  if (!(delay_tol > 0.0) || !(angle_tol_deg > 0.0)) throw ConfigError("matching tolerances must be positive");
}

double match_angle(const Direction& a, const Direction& b, MatchMode mode) {
  switch (mode) {
    case MatchMode::AzimuthOnly: return azimuth_distance(a, b);
    case MatchMode::MirrorCorrected: {
      const Direction fa{std::min(a.elevation, kPi - a.elevation), a.azimuth};
      const Direction fb{std::min(b.elevation, kPi - b.elevation), b.azimuth};
      return angular_distance(fa, fb);
    }
    case MatchMode::Full: break;
  }
  return angular_distance(a, b);
}

namespace {

constexpr double kSlack = 1e-12;

double normalized_distance(const ReflectionEstimate& e, const Reflection& t, const MatchConfig& cfg) {
  const double a = match_angle(e.doa, t.doa, cfg.mode) / deg2rad(cfg.angle_tol_deg);
  const double d = (e.delay - t.delay) / cfg.delay_tol;
  return std::sqrt(a * a + d * d);
}

std::vector<std::vector<std::size_t>> edges(const EstimateSet& est, const std::vector<Reflection>& truth,
                                            const MatchConfig& cfg) {
  std::vector<std::vector<std::size_t>> adj(est.reflections.size());
  for (std::size_t i = 0; i < est.reflections.size(); ++i)
    for (std::size_t j = 0; j < truth.size(); ++j)
      if (within_tolerance(est.reflections[i], truth[j], cfg)) adj[i].push_back(j);
  return adj;
}

}  // namespace

bool within_tolerance(const ReflectionEstimate& e, const Reflection& t, const MatchConfig& cfg) {
  const double a = match_angle(e.doa, t.doa, cfg.mode);
  return std::abs(e.delay - t.delay) <= cfg.delay_tol * (1.0 + kSlack) + kSlack &&
         a <= deg2rad(cfg.angle_tol_deg) * (1.0 + kSlack) + kSlack;
}

Matching match_reflections(const EstimateSet& estimates, const std::vector<Reflection>& truth,
                           const MatchConfig& cfg) {
  cfg.validate();
  const auto& est = estimates.reflections;
  Matching m;
  m.estimate_to_truth.assign(est.size(), -1);
  m.truth_to_estimate.assign(truth.size(), -1);
  const auto adj = edges(estimates, truth, cfg);

  std::vector<std::size_t> order(est.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return est[a].delay < est[b].delay; });
  for (auto i : order) {
    std::ptrdiff_t best = -1;
    double best_d = std::numeric_limits<double>::infinity();
    for (auto j : adj[i]) {
      if (m.truth_to_estimate[j] >= 0) continue;
      const double d = normalized_distance(est[i], truth[j], cfg);
      if (d < best_d) {
        best_d = d;
        best = static_cast<std::ptrdiff_t>(j);
      }
    }
    if (best >= 0) {
      m.estimate_to_truth[i] = best;
      m.truth_to_estimate[static_cast<std::size_t>(best)] = static_cast<std::ptrdiff_t>(i);
    }
  }

  std::vector<char> seen;
  std::function<bool(std::size_t)> augment = [&](std::size_t i) {
    for (auto j : adj[i]) {
      if (seen[j]) continue;
      seen[j] = 1;
      const auto owner = m.truth_to_estimate[j];
      if (owner < 0 || augment(static_cast<std::size_t>(owner))) {
        m.estimate_to_truth[i] = static_cast<std::ptrdiff_t>(j);
        m.truth_to_estimate[j] = static_cast<std::ptrdiff_t>(i);
        return true;
      }
    }
    return false;
  };
  for (auto i : order) {
    if (m.estimate_to_truth[i] >= 0) continue;
    seen.assign(truth.size(), 0);
    augment(i);
  }

  for (auto t : m.estimate_to_truth) (t >= 0 ? m.tp : m.fp) += 1;
  m.missed = truth.size() - m.tp;
  return m;
}

std::size_t optimal_match_count(const EstimateSet& estimates, const std::vector<Reflection>& truth,
                                const MatchConfig& cfg) {
  if (truth.size() > 8) throw ConfigError("optimal_match_count: at most 8 truths");
  const auto adj = edges(estimates, truth, cfg);
  std::size_t best = 0;
  std::function<void(std::size_t, unsigned, std::size_t)> go = [&](std::size_t i, unsigned used, std::size_t count) {
    if (i == adj.size()) {
      best = std::max(best, count);
      return;
    }
    go(i + 1, used, count);
    for (auto j : adj[i])
      if (!(used & (1u << j))) go(i + 1, used | (1u << j), count + 1);
  };
  go(0, 0, 0);
  return best;
}

MetricsRow compute_metrics(const Matching& m) {
  MetricsRow r;
  r.tp = m.tp;
  r.fp = m.fp;
  r.truth_count = m.truth_to_estimate.size();
  r.estimate_count = m.estimate_to_truth.size();
  r.p_d_defined = r.truth_count > 0;
  r.p_d = r.p_d_defined ? static_cast<double>(r.tp) / static_cast<double>(r.truth_count) : 0.0;
  r.no_detections = r.estimate_count == 0;
  r.p_fa = r.no_detections ? 0.0 : static_cast<double>(r.fp) / static_cast<double>(r.estimate_count);
  r.p_m = 1.0 - r.p_d;
  return r;
}

void classify_outcomes(int scene, const EstimateSet& estimates, const std::vector<Reflection>& truth,
                       const Matching& m, const MatchConfig& cfg, std::vector<ReflectionOutcome>& refl_out,
                       std::vector<EstimateOutcome>& est_out) {
  for (std::size_t j = 0; j < truth.size(); ++j) {
    ReflectionOutcome o;
    o.scene = scene;
    o.delay = truth[j].delay;
    o.amplitude = truth[j].amplitude;
    o.matched = m.truth_to_estimate[j] >= 0;
    if (!o.matched)
      for (std::size_t i = 0; i < estimates.reflections.size() && !o.merged; ++i)
        o.merged = m.estimate_to_truth[i] >= 0 && within_tolerance(estimates.reflections[i], truth[j], cfg);
    refl_out.push_back(o);
  }
  for (std::size_t i = 0; i < estimates.reflections.size(); ++i)
    est_out.push_back({scene, estimates.reflections[i].delay, m.estimate_to_truth[i] >= 0});
}

namespace {

std::vector<BinRow> make_bins(double width, double max) {
  std::vector<BinRow> bins;
  const auto n = static_cast<int>(std::ceil(max / width - 1e-9));
  for (int i = 0; i < n; ++i) bins.push_back({i * width, (i + 1) * width, 0, 0, std::nullopt});
  return bins;
}

std::size_t bin_index(double value, double width, std::size_t count) {
  if (!(value > 0.0)) return 0;
  const auto i = static_cast<std::size_t>(std::floor(value / width + 1e-9));
  return std::min(i, count - 1);
}

void finish_rates(std::vector<BinRow>& bins) {
  for (auto& b : bins)
    if (b.total > 0) b.rate = static_cast<double>(b.events) / static_cast<double>(b.total);
}

}  // namespace

BinnedTables bin_analysis(const std::vector<SceneMetrics>& rows, const std::vector<ReflectionOutcome>& reflections,
                          const std::vector<EstimateOutcome>& estimates, const BinSpec& spec) {
  BinnedTables t;
  t.miss_vs_amplitude = make_bins(spec.amplitude_width, spec.amplitude_max);
  t.miss_vs_delay = make_bins(spec.delay_width, spec.horizon);
  t.fp_vs_delay = make_bins(spec.delay_width, spec.horizon);
  for (const auto& r : reflections) {
    auto& a = t.miss_vs_amplitude[bin_index(r.amplitude, spec.amplitude_width, t.miss_vs_amplitude.size())];
    auto& d = t.miss_vs_delay[bin_index(r.delay, spec.delay_width, t.miss_vs_delay.size())];
    a.total += 1;
    d.total += 1;
    if (!r.matched) {
      a.events += 1;
      d.events += 1;
      t.misses += 1;
      if (r.merged) t.merged_misses += 1;
    }
  }
  for (const auto& e : estimates) {
    auto& b = t.fp_vs_delay[bin_index(e.delay, spec.delay_width, t.fp_vs_delay.size())];
    b.total += 1;
    if (!e.true_positive) b.events += 1;
  }
  finish_rates(t.miss_vs_amplitude);
  finish_rates(t.miss_vs_delay);
  finish_rates(t.fp_vs_delay);

  if (!rows.empty() && spec.count_groups > 0) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (const auto& r : rows) {
      lo = std::min(lo, static_cast<double>(r.metrics.truth_count));
      hi = std::max(hi, static_cast<double>(r.metrics.truth_count));
    }
    const double width = hi > lo ? (hi - lo) / spec.count_groups : 1.0;
    t.by_reflection_count.resize(static_cast<std::size_t>(spec.count_groups));
    for (int g = 0; g < spec.count_groups; ++g) {
      t.by_reflection_count[static_cast<std::size_t>(g)].lo = lo + g * width;
      t.by_reflection_count[static_cast<std::size_t>(g)].hi = lo + (g + 1) * width;
    }
    std::vector<double> pd_sum(t.by_reflection_count.size(), 0.0), pfa_sum(t.by_reflection_count.size(), 0.0);
    std::vector<std::size_t> pd_n(t.by_reflection_count.size(), 0);
    std::vector<std::size_t> group_of_scene;
    std::vector<int> scene_ids;
    for (const auto& r : rows) {
      const auto g = std::min<std::size_t>(
          static_cast<std::size_t>(std::floor((static_cast<double>(r.metrics.truth_count) - lo) / width + 1e-9)),
          t.by_reflection_count.size() - 1);
      auto& b = t.by_reflection_count[g];
      b.scenes += 1;
      if (r.metrics.p_d_defined) {
        pd_sum[g] += r.metrics.p_d;
        pd_n[g] += 1;
      }
      pfa_sum[g] += r.metrics.p_fa;
      scene_ids.push_back(r.scene);
      group_of_scene.push_back(g);
    }
    for (const auto& o : reflections) {
      if (o.matched) continue;
      const auto it = std::find(scene_ids.begin(), scene_ids.end(), o.scene);
      if (it == scene_ids.end()) continue;
      auto& b = t.by_reflection_count[group_of_scene[static_cast<std::size_t>(it - scene_ids.begin())]];
      b.misses += 1;
      if (o.merged) b.merged_misses += 1;
    }
    for (std::size_t g = 0; g < t.by_reflection_count.size(); ++g) {
      auto& b = t.by_reflection_count[g];
      if (pd_n[g] > 0) b.mean_pd = pd_sum[g] / static_cast<double>(pd_n[g]);
      if (b.scenes > 0) b.mean_pfa = pfa_sum[g] / static_cast<double>(b.scenes);
      if (b.misses > 0) b.merged_fraction = static_cast<double>(b.merged_misses) / static_cast<double>(b.misses);
    }
  }
  return t;
}

}  // namespace phalcor
