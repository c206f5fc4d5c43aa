#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "phalcor/clustering.hpp"
#include "phalcor/room_sim.hpp"

namespace phalcor {

enum class MatchMode { Full, AzimuthOnly, MirrorCorrected };

std::string_view to_string(MatchMode mode);
/// "full", "azimuth-only" or "mirror-corrected".
MatchMode match_mode_from_string(std::string_view name);

struct MatchConfig {
  double delay_tol = 0.5e-3;
  double angle_tol_deg = 15.0;
  MatchMode mode = MatchMode::Full;

  void validate() const;
};

/// Angle used for matching under the configured mode. Mirror-corrected folds
/// both elevations to min(theta, pi - theta) first.
double match_angle(const Direction& a, const Direction& b, MatchMode mode);

/// Both tolerances hold, boundaries included.
bool within_tolerance(const ReflectionEstimate& e, const Reflection& t, const MatchConfig& cfg);

struct Matching {
  std::vector<std::ptrdiff_t> estimate_to_truth;  // -1 when unmatched
  std::vector<std::ptrdiff_t> truth_to_estimate;
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t missed = 0;
};

/// One-to-one matching. Estimates in delay order greedily claim the nearest
/// unclaimed truth within tolerance (normalized distance, earlier truth on
/// ties); augmenting paths then complete it to maximum cardinality.
Matching match_reflections(const EstimateSet& estimates, const std::vector<Reflection>& truth,
                           const MatchConfig& cfg);

/// Maximum matching size by exhaustive search; for at most 8 truths.
std::size_t optimal_match_count(const EstimateSet& estimates, const std::vector<Reflection>& truth,
                                const MatchConfig& cfg);

struct MetricsRow {
  double p_d = 0.0;
  double p_fa = 0.0;
  double p_m = 1.0;
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t truth_count = 0;
  std::size_t estimate_count = 0;
  bool p_d_defined = true;  // false when the ground truth is empty
  bool no_detections = false;
};

MetricsRow compute_metrics(const Matching& matching);

struct ReflectionOutcome {
  int scene = 0;
  double delay = 0.0;
  double amplitude = 0.0;
  bool matched = false;
  bool merged = false;  // missed while within tolerance of an estimate claimed by another reflection
};

struct EstimateOutcome {
  int scene = 0;
  double delay = 0.0;
  bool true_positive = false;
};

void classify_outcomes(int scene, const EstimateSet& estimates, const std::vector<Reflection>& truth,
                       const Matching& matching, const MatchConfig& cfg, std::vector<ReflectionOutcome>& refl_out,
                       std::vector<EstimateOutcome>& est_out);

struct BinRow {
  double lo = 0.0;
  double hi = 0.0;
  std::size_t total = 0;
  std::size_t events = 0;
  std::optional<double> rate;  // events / total; empty for empty bins
};

struct CountBinRow {
  double lo = 0.0;
  double hi = 0.0;
  std::size_t scenes = 0;
  std::optional<double> mean_pd;
  std::optional<double> mean_pfa;
  std::size_t misses = 0;
  std::size_t merged_misses = 0;
  std::optional<double> merged_fraction;
};

struct BinSpec {
  double amplitude_width = 0.1;
  double amplitude_max = 1.0;
  double delay_width = 2e-3;
  double horizon = 20e-3;
  int count_groups = 5;
};

struct SceneMetrics {
  int scene = 0;
  MetricsRow metrics;
};

struct BinnedTables {
  std::vector<BinRow> miss_vs_amplitude;  // events = misses
  std::vector<BinRow> miss_vs_delay;
  std::vector<BinRow> fp_vs_delay;        // total = estimates, events = false positives
  std::vector<CountBinRow> by_reflection_count;
  std::size_t misses = 0;
  std::size_t merged_misses = 0;
};

BinnedTables bin_analysis(const std::vector<SceneMetrics>& rows, const std::vector<ReflectionOutcome>& reflections,
                          const std::vector<EstimateOutcome>& estimates, const BinSpec& spec = {});

}  // namespace phalcor
