#pragma once

#include <string>
#include <vector>

#include "phalcor/campaign.hpp"
#include "phalcor/evaluation.hpp"

namespace phalcor {

/// scene, room, seed, drr_db, truth_count, estimate_count, tp, fp, p_d, p_fa, p_m
void write_scene_rows_csv(const std::string& path, const std::vector<SceneReportRow>& rows);
std::vector<SceneReportRow> read_scene_rows_csv(const std::string& path);

/// scene, delay_s, amplitude, matched, merged
void write_reflection_outcomes_csv(const std::string& path, const std::vector<ReflectionOutcome>& rows);
std::vector<ReflectionOutcome> read_reflection_outcomes_csv(const std::string& path);

/// scene, delay_s, true_positive
void write_estimate_outcomes_csv(const std::string& path, const std::vector<EstimateOutcome>& rows);
std::vector<EstimateOutcome> read_estimate_outcomes_csv(const std::string& path);

/// Per-pair listing: estimate and truth indices (-1 when unmatched) with delays.
void write_matching_csv(const std::string& path, const EstimateSet& estimates, const std::vector<Reflection>& truth,
                        const Matching& matching);

/// The four plot tables; returns the file names written inside `dir`.
std::vector<std::string> write_bin_tables(const std::string& dir, const BinnedTables& tables);

std::string metrics_json(const MetricsRow& m);
std::string campaign_summary_json(const MetricsReport& report, std::uint64_t seed, const std::string& config_hash);

}  // namespace phalcor
