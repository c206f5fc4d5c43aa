#include "phalcor/report_io.hpp"

#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "phalcor/csv_io.hpp"
#include "phalcor/error.hpp"

namespace phalcor {

namespace {

using ojson = nlohmann::ordered_json;

std::string opt_number(const std::optional<double>& v) { return v ? csv_number(*v) : "nan"; }

std::string flag(bool b) { return b ? "1" : "0"; }

ojson number_or_null(double v) { return std::isfinite(v) ? ojson(v) : ojson(); }

ojson metrics_object(const MetricsRow& m) {
  ojson j;
  j["p_d"] = m.p_d_defined ? ojson(m.p_d) : ojson();
  j["p_fa"] = m.p_fa;
  j["p_m"] = m.p_d_defined ? ojson(m.p_m) : ojson();
  j["tp"] = m.tp;
  j["fp"] = m.fp;
  j["truth_count"] = m.truth_count;
  j["estimate_count"] = m.estimate_count;
  j["no_detections"] = m.no_detections;
  return j;
}

}  // namespace

void write_scene_rows_csv(const std::string& path, const std::vector<SceneReportRow>& rows) {
  CsvTable t;
  t.header = {"scene", "room", "seed", "drr_db", "truth_count", "estimate_count", "tp", "fp", "p_d", "p_fa", "p_m"};
  for (const auto& r : rows) {
    const auto& m = r.metrics;
    t.rows.push_back({std::to_string(r.scene), std::to_string(r.room), std::to_string(r.seed), csv_number(r.drr_db),
                      std::to_string(m.truth_count), std::to_string(m.estimate_count), std::to_string(m.tp),
                      std::to_string(m.fp), m.p_d_defined ? csv_number(m.p_d) : "nan", csv_number(m.p_fa),
                      m.p_d_defined ? csv_number(m.p_m) : "nan"});
  }
  write_csv(path, t);
}

std::vector<SceneReportRow> read_scene_rows_csv(const std::string& path) {
  const auto t = read_csv(path);
  const auto cs = t.column("scene"), cr = t.column("room"), cseed = t.column("seed"), cd = t.column("drr_db"),
             ct = t.column("truth_count"), ce = t.column("estimate_count"), ctp = t.column("tp"), cfp = t.column("fp"),
             cpd = t.column("p_d"), cpfa = t.column("p_fa"), cpm = t.column("p_m");
  std::vector<SceneReportRow> out;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    SceneReportRow r;
    r.scene = static_cast<int>(t.number(i, cs));
    r.room = static_cast<int>(t.number(i, cr));
    r.seed = std::stoull(t.rows[i][cseed]);
    r.drr_db = t.number(i, cd);
    auto& m = r.metrics;
    m.truth_count = static_cast<std::size_t>(t.number(i, ct));
    m.estimate_count = static_cast<std::size_t>(t.number(i, ce));
    m.tp = static_cast<std::size_t>(t.number(i, ctp));
    m.fp = static_cast<std::size_t>(t.number(i, cfp));
    m.p_d = t.number(i, cpd);
    m.p_fa = t.number(i, cpfa);
    m.p_m = t.number(i, cpm);
    m.p_d_defined = m.truth_count > 0;
    m.no_detections = m.estimate_count == 0;
    out.push_back(r);
  }
  return out;
}

void write_reflection_outcomes_csv(const std::string& path, const std::vector<ReflectionOutcome>& rows) {
  CsvTable t;
  t.header = {"scene", "delay_s", "amplitude", "matched", "merged"};
  for (const auto& r : rows)
    t.rows.push_back({std::to_string(r.scene), csv_number(r.delay), csv_number(r.amplitude), flag(r.matched), flag(r.merged)});
  write_csv(path, t);
}

std::vector<ReflectionOutcome> read_reflection_outcomes_csv(const std::string& path) {
  const auto t = read_csv(path);
  const auto cs = t.column("scene"), cd = t.column("delay_s"), ca = t.column("amplitude"), cm = t.column("matched"),
             cg = t.column("merged");
  std::vector<ReflectionOutcome> out;
  for (std::size_t i = 0; i < t.rows.size(); ++i)
    out.push_back({static_cast<int>(t.number(i, cs)), t.number(i, cd), t.number(i, ca), t.number(i, cm) != 0.0,
                   t.number(i, cg) != 0.0});
  return out;
}

void write_estimate_outcomes_csv(const std::string& path, const std::vector<EstimateOutcome>& rows) {
  CsvTable t;
  t.header = {"scene", "delay_s", "true_positive"};
  for (const auto& r : rows) t.rows.push_back({std::to_string(r.scene), csv_number(r.delay), flag(r.true_positive)});
  write_csv(path, t);
}

std::vector<EstimateOutcome> read_estimate_outcomes_csv(const std::string& path) {
  const auto t = read_csv(path);
  const auto cs = t.column("scene"), cd = t.column("delay_s"), ct = t.column("true_positive");
  std::vector<EstimateOutcome> out;
  for (std::size_t i = 0; i < t.rows.size(); ++i)
    out.push_back({static_cast<int>(t.number(i, cs)), t.number(i, cd), t.number(i, ct) != 0.0});
  return out;
}

void write_matching_csv(const std::string& path, const EstimateSet& estimates, const std::vector<Reflection>& truth,
                        const Matching& matching) {
  CsvTable t;
  t.header = {"estimate", "truth", "estimate_delay_s", "truth_delay_s", "truth_amplitude"};
  for (std::size_t e = 0; e < estimates.reflections.size(); ++e) {
    const int k = matching.estimate_to_truth[e];
    t.rows.push_back({std::to_string(e), std::to_string(k), csv_number(estimates.reflections[e].delay),
                      k >= 0 ? csv_number(truth[static_cast<std::size_t>(k)].delay) : "nan",
                      k >= 0 ? csv_number(truth[static_cast<std::size_t>(k)].amplitude) : "nan"});
  }
  for (std::size_t k = 0; k < truth.size(); ++k)
    if (matching.truth_to_estimate[k] < 0)
      t.rows.push_back({"-1", std::to_string(k), "nan", csv_number(truth[k].delay), csv_number(truth[k].amplitude)});
  write_csv(path, t);
}

std::vector<std::string> write_bin_tables(const std::string& dir, const BinnedTables& tables) {
  namespace fs = std::filesystem;
  auto rate_table = [&](const std::string& name, const std::vector<BinRow>& rows, const char* unit) {
    CsvTable t;
    t.header = {std::string("lo_") + unit, std::string("hi_") + unit, "total", "events", "rate"};
    for (const auto& r : rows)
      t.rows.push_back({csv_number(r.lo), csv_number(r.hi), std::to_string(r.total), std::to_string(r.events), opt_number(r.rate)});
    write_csv((fs::path(dir) / name).string(), t);
    return name;
  };
  std::vector<std::string> names;
  names.push_back(rate_table("bins_miss_vs_amplitude.csv", tables.miss_vs_amplitude, "amp"));
  names.push_back(rate_table("bins_miss_vs_delay.csv", tables.miss_vs_delay, "s"));
  names.push_back(rate_table("bins_fp_vs_delay.csv", tables.fp_vs_delay, "s"));
  CsvTable t;
  t.header = {"lo_count", "hi_count", "scenes", "mean_p_d", "mean_p_fa", "misses", "merged_misses", "merged_fraction"};
  for (const auto& r : tables.by_reflection_count)
    t.rows.push_back({csv_number(r.lo), csv_number(r.hi), std::to_string(r.scenes), opt_number(r.mean_pd),
                      opt_number(r.mean_pfa), std::to_string(r.misses), std::to_string(r.merged_misses),
                      opt_number(r.merged_fraction)});
  write_csv((fs::path(dir) / "bins_reflection_count.csv").string(), t);
  names.push_back("bins_reflection_count.csv");
  return names;
}

std::string metrics_json(const MetricsRow& m) { return metrics_object(m).dump(2) + "\n"; }

std::string campaign_summary_json(const MetricsReport& report, std::uint64_t seed, const std::string& config_hash) {
  ojson j;
  j["array"] = report.array_label;
  j["mode"] = report.mode_label;
  j["subcluster"] = report.subcluster;
  j["seed"] = seed;
  j["config_hash"] = config_hash;
  j["scenes"] = report.rows.size();
  j["skipped"] = report.skipped;
  const auto& a = report.aggregate;
  j["aggregate"] = {{"scenes_with_truth", a.scenes},
                    {"mean_p_d", number_or_null(a.mean_pd)},
                    {"std_p_d", number_or_null(a.std_pd)},
                    {"mean_p_fa", number_or_null(a.mean_pfa)},
                    {"std_p_fa", number_or_null(a.std_pfa)},
                    {"mean_p_m", number_or_null(a.mean_pm)},
                    {"std_p_m", number_or_null(a.std_pm)}};
  auto& rows = j["per_scene"] = ojson::array();
  for (const auto& r : report.rows) {
    auto o = metrics_object(r.metrics);
    o["scene"] = r.scene;
    o["room"] = r.room;
    o["drr_db"] = r.drr_db;
    rows.push_back(o);
  }
  return j.dump(2) + "\n";
}

}  // namespace phalcor
