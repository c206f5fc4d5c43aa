#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/core.h>
#include <json.hpp>

#include "phalcor/campaign.hpp"
#include "phalcor/config.hpp"
#include "phalcor/csv_io.hpp"
#include "phalcor/error.hpp"
#include "phalcor/manifest.hpp"
#include "phalcor/pipeline.hpp"
#include "phalcor/report_io.hpp"
#include "phalcor/signal_io.hpp"
#include "phalcor/synth_rir.hpp"

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;
using namespace phalcor;

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out_dir = "out";
  int workers = 0;
  bool timings = false;
  bool quiet = false;
};

struct Overrides {
  std::string array;
  std::string mode;
  bool no_subcluster = false;
  int scenes = 0;
};

class Run {
 public:
  Run(std::string command, const Common& common, const ConfigBundle& bundle) : common_(common), start_(clock::now()) {
    manifest_.command = std::move(command);
    manifest_.config_hash = config_hash(bundle);
    manifest_.seed = bundle.seed;
    manifest_.versions = module_versions();
    manifest_.include_timings = common.timings;
    fs::create_directories(common.out_dir);
    save_config(path("config.json"), bundle);
    add("config.json");
  }

  std::string path(const std::string& name) const { return (fs::path(common_.out_dir) / name).string(); }
  void add(const std::string& name) { manifest_.add_file(common_.out_dir, name); }
  void write_text(const std::string& name, const std::string& text) {
    std::ofstream f(path(name), std::ios::binary);
    if (!f) throw IoError("cannot write " + path(name));
    f << text;
    add(name);
  }
  void stage(const std::string& name) {
    const auto now = clock::now();
    manifest_.timings.emplace_back(name, std::chrono::duration<double>(now - last_).count());
    last_ = now;
  }
  void stages(const StageTimings& t) {
    for (const auto& s : t) manifest_.timings.push_back(s);
    last_ = clock::now();
  }
  void finish() {
    manifest_.timings.emplace_back("total", std::chrono::duration<double>(clock::now() - start_).count());
    manifest_.write(common_.out_dir);
    if (!common_.quiet) fmt::print(stderr, "{}: {} files in {}\n", manifest_.command, manifest_.files.size() + 1, common_.out_dir);
  }

 private:
  using clock = std::chrono::steady_clock;
  const Common& common_;
  RunManifest manifest_;
  clock::time_point start_;
  clock::time_point last_ = clock::now();
};

ArrayGeometry resolve_array(const std::string& spec) {
  if (spec == "em32" || spec == "em32-like") return em32_like();
  if (spec == "semicircular" || spec == "semicircular-6") return semicircular6();
  if (fs::exists(spec)) return load_array_descriptor(spec);
  throw ConfigError("array: unknown preset or missing descriptor '" + spec + "'");
}

ConfigBundle load_bundle(const Common& common, const Overrides& ov) {
  ConfigBundle b = common.config.empty() ? default_config() : load_config(common.config);
  if (common.seed) b = with_seed(b, *common.seed);
  if (common.workers > 0) b.campaign.workers = common.workers;
  if (!ov.array.empty()) b.array = resolve_array(ov.array);
  if (!ov.mode.empty()) {
    b.pipeline.match.mode = match_mode_from_string(ov.mode);
    b.pipeline.cluster.azimuth_only = b.pipeline.match.mode == MatchMode::AzimuthOnly;
  }
  if (ov.no_subcluster) b.pipeline.cluster.subcluster = false;
  if (ov.scenes > 0) b.campaign.n_scenes = ov.scenes;
  b.validate();
  return b;
}

ojson vec_json(const Eigen::Vector3d& v) { return ojson::array({v.x(), v.y(), v.z()}); }

ojson scene_json(const SceneConfig& s, const ReflectionSet& refs) {
  ojson j;
  j["room_preset"] = s.room_preset;
  j["dims"] = vec_json(s.room.dims);
  j["reflection_coeff"] = s.room.wall_coeffs[0];
  j["target_t60"] = s.target_t60;
  j["source_position"] = vec_json(s.source_pos);
  j["array_position"] = vec_json(s.array_pos);
  j["array"] = s.array.label;
  j["fs"] = s.fs;
  j["noise_level"] = s.noise_level;
  j["seed"] = s.seed;
  j["direct_distance"] = refs.direct_distance;
  j["direct_doa"] = {{"elevation_rad", refs.direct.doa.elevation}, {"azimuth_rad", refs.direct.doa.azimuth}};
  j["reflections_simulated"] = refs.reflections.size();
  return j;
}

ojson detection_json(const Detections& d) {
  ojson j;
  j["direct_doa"] = {{"elevation_rad", d.direct.elevation}, {"azimuth_rad", d.direct.azimuth}};
  j["observations"] = d.observations;
  j["raw_candidates"] = d.raw.size();
  j["candidates"] = d.candidates.size();
  return j;
}

std::vector<Reflection> truth_within(const ReflectionSet& refs, double horizon) {
  return refs.truncated(horizon).reflections;
}

void write_signal(Run& run, const MultichannelSignal& sig, const std::string& format) {
  if (format == "wav") {
    write_wav(run.path("signals.wav"), sig, SampleFormat::Float32);
    run.add("signals.wav");
  } else if (format == "f32") {
    write_raw_f32(run.path("signals.f32"), sig);
    run.add("signals.f32");
    run.add("signals.f32.json");
  } else {
    throw ConfigError("format: expected wav or f32");
  }
}

void evaluate_into(Run& run, const EstimateSet& est, const std::vector<Reflection>& truth, const MatchConfig& match) {
  const auto m = match_reflections(est, truth, match);
  run.write_text("metrics.json", metrics_json(compute_metrics(m)));
  write_matching_csv(run.path("matches.csv"), est, truth, m);
  run.add("matches.csv");
}

double rir_length(const SynthConfig& cfg) { return cfg.horizon + 5e-3; }

void write_synth(Run& run, const ReflectionSet& refs, const SynthConfig& cfg, double fs) {
  write_reflections_csv(run.path("synth_reflections.csv"), refs);
  run.add("synth_reflections.csv");
  const auto rir = render_rir(refs, fs, rir_length(cfg));
  MultichannelSignal sig;
  sig.fs = fs;
  sig.data = Eigen::Map<const Eigen::RowVectorXd>(rir.samples.data(), static_cast<Eigen::Index>(rir.samples.size()));
  write_wav(run.path("synth_rir.wav"), sig, SampleFormat::Float32);
  run.add("synth_rir.wav");
}

int cmd_simulate(const Common& c, const Overrides& ov, const std::string& format) {
  const auto b = load_bundle(c, ov);
  Run run("simulate", c, b);
  const auto scene = scene_from_config(b);
  const auto sig = synthesize_scene(scene);
  run.stage("simulate");
  run.write_text("scene.json", scene_json(scene, sig.reflections).dump(2) + "\n");
  write_reflections_csv(run.path("truth.csv"), sig.reflections.truncated(b.pipeline.truth_horizon));
  run.add("truth.csv");
  write_reflections_csv(run.path("reflections.csv"), sig.reflections);
  run.add("reflections.csv");
  write_signal(run, sig.mics, format);
  run.finish();
  return 0;
}

int cmd_detect(const Common& c, const Overrides& ov, const std::string& input) {
  const auto b = load_bundle(c, ov);
  Run run("detect", c, b);
  const auto sig = read_signal(input);
  if (static_cast<std::size_t>(sig.channels()) != b.array.size())
    throw ConfigError(fmt::format("input: {} channels, array '{}' has {} mics", sig.channels(), b.array.label, b.array.size()));
  const Estimator est(b.array, b.pipeline, sig.fs);
  run.stage("setup");
  StageTimings t;
  const auto det = est.detect(sig, &t);
  run.stages(t);
  const auto estimates = Estimator::estimate(det, b.pipeline.cluster);
  run.stage("clustering");
  write_candidates_csv(run.path("candidates.csv"), det.candidates);
  run.add("candidates.csv");
  write_estimates_csv(run.path("estimates.csv"), estimates);
  run.add("estimates.csv");
  run.write_text("detection.json", detection_json(det).dump(2) + "\n");
  run.finish();
  return 0;
}

int cmd_evaluate(const Common& c, const Overrides& ov, const std::string& estimates, const std::string& truth) {
  const auto b = load_bundle(c, ov);
  Run run("evaluate", c, b);
  auto est = read_estimates_csv(estimates);
  if (b.pipeline.match.mode == MatchMode::AzimuthOnly) est = collapse_to_azimuth(est);
  evaluate_into(run, est, truth_within(read_reflections_csv(truth), b.pipeline.truth_horizon), b.pipeline.match);
  run.finish();
  return 0;
}

void write_campaign_tables(Run& run, const MetricsReport& rep, const BinSpec& spec) {
  write_scene_rows_csv(run.path("scenes.csv"), rep.rows);
  run.add("scenes.csv");
  write_reflection_outcomes_csv(run.path("reflection_outcomes.csv"), rep.reflections);
  run.add("reflection_outcomes.csv");
  write_estimate_outcomes_csv(run.path("estimate_outcomes.csv"), rep.estimates);
  run.add("estimate_outcomes.csv");
  for (const auto& name : write_bin_tables(run.path(""), bin_analysis(scene_metrics(rep), rep.reflections, rep.estimates, spec)))
    run.add(name);
}

BinSpec bin_spec(const ConfigBundle& b) {
  BinSpec s;
  s.horizon = b.pipeline.truth_horizon;
  return s;
}

int cmd_campaign(const Common& c, const Overrides& ov) {
  const auto b = load_bundle(c, ov);
  Run run("campaign", c, b);
  const Estimator est(b.array, b.pipeline, b.campaign.fs);
  run.stage("setup");
  const auto det = run_campaign_detections(b.campaign, est, [&](int done, int total) {
    if (!c.quiet) fmt::print(stderr, "\rscenes {}/{}", done, total);
  });
  if (!c.quiet) fmt::print(stderr, "\n");
  run.stage("detection");
  const auto rep = evaluate_campaign(det, b.pipeline.cluster, b.pipeline.match);
  run.stage("evaluation");
  run.write_text("campaign.json", campaign_summary_json(rep, b.seed, fmt::format("{:016x}", config_hash(b))));
  write_campaign_tables(run, rep, bin_spec(b));
  run.finish();
  return 0;
}

int cmd_bins(const Common& c, const Overrides& ov, const std::string& dir) {
  const auto b = load_bundle(c, ov);
  const auto in = [&](const char* name) { return (fs::path(dir) / name).string(); };
  const auto rows = read_scene_rows_csv(in("scenes.csv"));
  const auto refl = read_reflection_outcomes_csv(in("reflection_outcomes.csv"));
  const auto ests = read_estimate_outcomes_csv(in("estimate_outcomes.csv"));
  Run run("bins", c, b);
  std::vector<SceneMetrics> sm;
  for (const auto& r : rows) sm.push_back({r.scene, r.metrics});
  for (const auto& name : write_bin_tables(run.path(""), bin_analysis(sm, refl, ests, bin_spec(b)))) run.add(name);
  run.finish();
  return 0;
}

int cmd_synth(const Common& c, const Overrides& ov, const std::string& estimates) {
  const auto b = load_bundle(c, ov);
  Run run("synth", c, b);
  const auto& cfg = b.synth;
  const auto profile = reflection_count_profile(cfg);
  CsvTable t;
  t.header = {"interval_start_s", "interval_end_s", "expected_count", "count"};
  for (std::size_t i = 0; i < profile.size(); ++i) {
    const double t0 = static_cast<double>(i) * cfg.interval, t1 = t0 + cfg.interval;
    t.rows.push_back({csv_number(t0), csv_number(t1),
                      csv_number(expected_reflection_count(t1, cfg.volume, cfg.c) - expected_reflection_count(t0, cfg.volume, cfg.c)),
                      std::to_string(profile[i])});
  }
  write_csv(run.path("profile.csv"), t);
  run.add("profile.csv");
  const auto refs = estimates.empty() ? fit_amplitudes(synthesize_reflections(profile, cfg), cfg)
                                      : build_estimated_rir(read_estimates_csv(estimates), cfg);
  write_synth(run, refs, cfg, b.scene.fs);
  run.finish();
  return 0;
}

int cmd_demo(const Common& c, const Overrides& ov) {
  auto b = load_bundle(c, ov);
  auto scene = demo_scenario();
  scene.seed = b.seed;
  scene.array = b.array;
  Run run("demo", c, b);
  const auto sig = synthesize_scene(scene);
  run.stage("simulate");
  const Estimator est(scene.array, b.pipeline, scene.fs);
  run.stage("setup");
  StageTimings t;
  const auto det = est.detect(sig.mics, &t);
  run.stages(t);
  const auto estimates = Estimator::estimate(det, b.pipeline.cluster);
  run.stage("clustering");
  run.write_text("scene.json", scene_json(scene, sig.reflections).dump(2) + "\n");
  write_reflections_csv(run.path("truth.csv"), sig.reflections.truncated(b.pipeline.truth_horizon));
  run.add("truth.csv");
  write_candidates_csv(run.path("candidates.csv"), det.candidates);
  run.add("candidates.csv");
  write_estimates_csv(run.path("estimates.csv"), estimates);
  run.add("estimates.csv");
  run.write_text("detection.json", detection_json(det).dump(2) + "\n");
  auto scored = estimates;
  if (b.pipeline.match.mode == MatchMode::AzimuthOnly) scored = collapse_to_azimuth(scored);
  evaluate_into(run, scored, truth_within(sig.reflections, b.pipeline.truth_horizon), b.pipeline.match);
  auto synth = b.synth;
  synth.direct_doa = det.direct;
  write_synth(run, build_estimated_rir(estimates, synth), synth, scene.fs);
  run.finish();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Early reflection simulation, detection and evaluation"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kVersion));

  Common common;
  Overrides ov;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", common.config, "JSON configuration file")->check(CLI::ExistingFile);
    sub->add_option("--seed", common.seed, "Master seed");
    sub->add_option("--out-dir", common.out_dir, "Output directory")->capture_default_str();
    sub->add_option("--workers", common.workers, "Worker threads (default PHALCOR_WORKERS or all cores)");
    sub->add_flag("--timings", common.timings, "Record stage timings in the manifest");
    sub->add_flag("-q,--quiet", common.quiet, "No progress output");
    sub->add_option("--array", ov.array, "em32-like, semicircular-6 or a descriptor file");
    sub->add_option("--mode", ov.mode, "full, azimuth-only or mirror-corrected");
    sub->add_flag("--no-subcluster", ov.no_subcluster, "Disable cluster splitting");
  };

  std::string format = "wav", input, estimates, truth, campaign_dir;

  auto* simulate = app.add_subcommand("simulate", "Simulate one scene: signals and ground truth");
  add_common(simulate);
  simulate->add_option("--format", format, "wav or f32")->capture_default_str();

  auto* detect = app.add_subcommand("detect", "Detect reflections in a multichannel recording");
  add_common(detect);
  detect->add_option("--input", input, "Signal file (.wav or raw float32)")->required()->check(CLI::ExistingFile);

  auto* evaluate = app.add_subcommand("evaluate", "Score estimates against ground truth");
  add_common(evaluate);
  evaluate->add_option("--estimates", estimates, "estimates.csv")->required()->check(CLI::ExistingFile);
  evaluate->add_option("--truth", truth, "truth.csv")->required()->check(CLI::ExistingFile);

  auto* campaign = app.add_subcommand("campaign", "Monte Carlo campaign over sampled scenes");
  add_common(campaign);
  campaign->add_option("--scenes", ov.scenes, "Number of scenes");

  auto* bins = app.add_subcommand("bins", "Recompute plot tables from a campaign directory");
  add_common(bins);
  bins->add_option("--campaign-dir", campaign_dir, "Campaign output directory")->required()->check(CLI::ExistingDirectory);

  auto* synth = app.add_subcommand("synth", "Statistical early RIR, optionally from estimates");
  add_common(synth);
  synth->add_option("--estimates", estimates, "estimates.csv to inject")->check(CLI::ExistingFile);

  auto* demo = app.add_subcommand("demo", "Listening-test room through the whole chain");
  add_common(demo);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : static_cast<int>(ErrorCategory::Config);
  }

  try {
    if (*simulate) return cmd_simulate(common, ov, format);
    if (*detect) return cmd_detect(common, ov, input);
    if (*evaluate) return cmd_evaluate(common, ov, estimates, truth);
    if (*campaign) return cmd_campaign(common, ov);
    if (*bins) return cmd_bins(common, ov, campaign_dir);
    if (*synth) return cmd_synth(common, ov, estimates);
    if (*demo) return cmd_demo(common, ov);
  } catch (const Error& e) {
    static constexpr const char* names[] = {"", "", "config", "geometry", "infeasible", "insufficient-decay", "io", "campaign"};
    const int code = static_cast<int>(e.category());
    fmt::print(stderr, "error [{}]: {}\n", names[code], e.what());
    return code;
  } catch (const std::exception& e) {
    fmt::print(stderr, "error [internal]: {}\n", e.what());
    return 1;
  }
  return 0;
}
