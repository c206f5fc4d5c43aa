#include "phalcor/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "phalcor/error.hpp"
#include "phalcor/hash.hpp"

namespace phalcor {

using nlohmann::json;

namespace {

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

// Reads the keys of one object and rejects the ones nobody asked for.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError((path_.empty() ? std::string("config") : path_) + ": expected an object");
  }

  const json* find(const std::string& key) {
    seen_.insert(key);
    const auto it = j_.find(key);
    return it == j_.end() || it->is_null() ? nullptr : &*it;
  }

  template <typename T>
  void get(const std::string& key, T& out) {
    const json* v = find(key);
    if (!v) return;
    try {
      if constexpr (std::is_same_v<T, bool>) {
        if (!v->is_boolean()) throw ConfigError("");
      } else if constexpr (std::is_arithmetic_v<T>) {
        if (!v->is_number()) throw ConfigError("");
        if constexpr (std::is_integral_v<T>) {
          if (!v->is_number_integer() && !v->is_number_unsigned()) throw ConfigError("");
          if constexpr (std::is_unsigned_v<T>) {
            if (v->is_number_integer() && v->get<std::int64_t>() < 0) throw ConfigError("");
          }
        }
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (!v->is_string()) throw ConfigError("");
      }
      out = v->get<T>();
    } catch (const std::exception&) {
      throw ConfigError(join(path_, key) + ": wrong type");
    }
  }

  void vec3(const std::string& key, Eigen::Vector3d& out) {
    const json* v = find(key);
    if (!v) return;
    if (!v->is_array() || v->size() != 3) throw ConfigError(join(path_, key) + ": expected [x, y, z]");
    for (int i = 0; i < 3; ++i) {
      if (!(*v)[static_cast<std::size_t>(i)].is_number()) throw ConfigError(join(path_, key) + ": expected numbers");
      out[i] = (*v)[static_cast<std::size_t>(i)].get<double>();
    }
  }

  void direction(const std::string& key, Direction& out) {
    const json* v = find(key);
    if (!v) return;
    if (!v->is_array() || v->size() != 2 || !(*v)[0].is_number() || !(*v)[1].is_number())
      throw ConfigError(join(path_, key) + ": expected [elevation_rad, azimuth_rad]");
    out = {(*v)[0].get<double>(), (*v)[1].get<double>()};
  }

  std::optional<Section> child(const std::string& key) {
    const json* v = find(key);
    if (!v) return std::nullopt;
    return Section(*v, join(path_, key));
  }

  const std::string& path() const { return path_; }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key())) throw ConfigError(join(path_, it.key()) + ": unknown key");
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

void check(bool ok, const std::string& key, const std::string& what) {
  if (!ok) throw ConfigError(key + ": " + what);
}

void read_source(Section s, SourceSpec& src) {
  s.get("generator", src.generator);
  s.get("path", src.wav_path);
  s.get("min_seconds", src.min_seconds);
  s.get("max_seconds", src.max_seconds);
  s.finish();
  check(src.generator == "speech-like" || src.generator == "wav", join(s.path(), "generator"),
        "expected \"speech-like\" or \"wav\"");
  check(src.generator != "wav" || !src.wav_path.empty(), join(s.path(), "path"), "required for the wav generator");
  check(src.min_seconds > 0.0 && src.max_seconds >= src.min_seconds, join(s.path(), "min_seconds"),
        "need 0 < min_seconds <= max_seconds");
}

void read_placement(Section s, PlacementRules& p) {
  s.get("clearance", p.clearance);
  s.get("min_distance", p.min_distance);
  s.get("max_distance", p.max_distance);
  s.get("perturbation", p.perturbation);
  s.get("max_attempts", p.max_attempts);
  s.finish();
  check(p.clearance >= 0.0, join(s.path(), "clearance"), "must be >= 0");
  check(p.min_distance > 0.0 && p.max_distance >= p.min_distance, join(s.path(), "min_distance"),
        "need 0 < min_distance <= max_distance");
  check(p.perturbation >= 0.0, join(s.path(), "perturbation"), "must be >= 0");
  check(p.max_attempts >= 1, join(s.path(), "max_attempts"), "must be >= 1");
}

json source_json(const SourceSpec& s) {
  return {{"generator", s.generator}, {"path", s.wav_path}, {"min_seconds", s.min_seconds}, {"max_seconds", s.max_seconds}};
}

json placement_json(const PlacementRules& p) {
  return {{"clearance", p.clearance},
          {"min_distance", p.min_distance},
          {"max_distance", p.max_distance},
          {"perturbation", p.perturbation},
          {"max_attempts", p.max_attempts}};
}

json vec_json(const Eigen::Vector3d& v) { return json::array({v.x(), v.y(), v.z()}); }

json array_json(const ArrayGeometry& a) {
  for (const char* name : {"em32-like", "semicircular-6"}) {
    const auto p = array_preset(name);
    if (array_descriptor_json(p) == array_descriptor_json(a)) return name;
  }
  return json::parse(array_descriptor_json(a));
}

json to_json(const ConfigBundle& b) {
  const auto& p = b.pipeline;
  const auto& d = p.detector;
  const auto& c = p.cluster;
  const auto& s = b.scene;
  json j;
  j["seed"] = b.seed;
  j["array"] = array_json(b.array);
  j["scene"] = {{"room_preset", s.room_preset},
                {"dims", vec_json(s.dims)},
                {"t60", s.t60},
                {"reflection_coeff", s.reflection_coeff},
                {"calibration", std::string(to_string(s.calibration))},
                {"placement", s.sample_positions ? "sample" : "fixed"},
                {"source_position", vec_json(s.source_position)},
                {"array_position", vec_json(s.array_position)},
                {"noise_level", s.noise_level},
                {"fs", s.fs},
                {"max_delay", s.max_delay},
                {"sim_max_freq", s.sim_max_freq},
                {"source", source_json(s.source)},
                {"placement_rules", placement_json(s.placement)}};
  j["stft"] = {{"window_seconds", p.stft.window_seconds}, {"overlap", p.stft.overlap}};
  j["bands"] = {{"f_lo", p.bands.f_lo},
                {"f_hi", p.bands.f_hi},
                {"bandwidth", p.bands.bandwidth},
                {"n_bands", p.bands.n_bands},
                {"bins_per_band", p.bands.bins_per_band}};
  j["scm"] = {{"frames_per_group", p.frames_per_group}, {"advance", p.group_advance}};
  j["grid"] = {{"size", p.grid_size}, {"scheme", p.grid_scheme}};
  j["focusing"] = {{"rcond", p.focusing_rcond}, {"cache_dir", p.cache_dir}};
  j["detector"] = {{"rho_min", d.rho_min},
                   {"omega_th_deg", d.omega_th_deg},
                   {"eps_u", d.eps_u},
                   {"s_max", d.s_max},
                   {"delay_min", d.delays.min},
                   {"delay_max", d.delays.max},
                   {"delay_step", d.delays.step},
                   {"direct_doa", d.direct_doa ? json::array({d.direct_doa->elevation, d.direct_doa->azimuth}) : json()},
                   {"dedup_tau", d.dedup_tau},
                   {"dedup_angle_deg", d.dedup_angle_deg},
                   {"sidelobe_suppression", d.sidelobe_suppression},
                   {"reject_direct_atoms", d.reject_direct_atoms},
                   {"require_omp_fit", d.require_omp_fit}};
  j["clustering"] = {{"gamma_omega_deg", c.gamma_omega_deg},
                     {"gamma_tau", c.gamma_tau},
                     {"eps", c.eps},
                     {"density", c.density},
                     {"density_per_observation", c.density_per_observation},
                     {"observation_density", c.observation_density},
                     {"min_pts_absolute", c.min_pts_absolute},
                     {"subcluster", c.subcluster},
                     {"split_threshold", c.split_threshold},
                     {"split_requires_min_pts", c.split_requires_min_pts},
                     {"kmeans_restarts", c.kmeans_restarts},
                     {"max_depth", c.max_depth},
                     {"azimuth_only", c.azimuth_only}};
  j["matching"] = {{"delay_tol", p.match.delay_tol},
                   {"angle_tol_deg", p.match.angle_tol_deg},
                   {"mode", std::string(to_string(p.match.mode))}};
  j["evaluation"] = {{"truth_horizon", p.truth_horizon}};
  const auto& cp = b.campaign;
  j["campaign"] = {{"n_scenes", cp.n_scenes},
                   {"rooms", cp.rooms},
                   {"drr_min_db", cp.drr_min_db},
                   {"drr_max_db", cp.drr_max_db},
                   {"drr_window", cp.drr_window},
                   {"calibration", std::string(to_string(cp.calibration))},
                   {"max_attempts", cp.max_attempts},
                   {"max_skip_fraction", cp.max_skip_fraction},
                   {"noise_level", cp.noise_level},
                   {"max_delay", cp.max_delay},
                   {"fs", cp.fs},
                   {"workers", cp.workers},
                   {"placement", placement_json(cp.placement)},
                   {"source", source_json(cp.source)}};
  const auto& sy = b.synth;
  j["synth"] = {{"volume", sy.volume},
                {"t60", sy.t60},
                {"interval", sy.interval},
                {"horizon", sy.horizon},
                {"c", sy.c},
                {"direct_doa", json::array({sy.direct_doa.elevation, sy.direct_doa.azimuth})},
                {"anchoring", sy.anchoring == SynthAnchoring::Drr ? "drr" : "direct"},
                {"source_distance", sy.source_distance},
                {"drr_db", sy.drr_db}};
  return j;
}

}  // namespace

void ConfigBundle::validate() const {
  array.validate();
  pipeline.validate();
  campaign.validate();
  synth.validate();
  if (scene.room_preset != 0) reference_room(scene.room_preset);
  if (!(scene.dims.array() > 0.0).all()) throw ConfigError("scene.dims must be positive");
  if (!(scene.noise_level >= 0.0)) throw ConfigError("scene.noise_level must be >= 0");
  if (!(scene.fs > 0.0) || !(scene.max_delay > 0.0) || !(scene.sim_max_freq > 0.0))
    throw ConfigError("scene: fs, max_delay and sim_max_freq must be positive");
  if (scene.sim_max_freq > scene.fs / 2) throw ConfigError("scene.sim_max_freq exceeds the Nyquist frequency");
  if (scene.room_preset == 0 && scene.t60 <= 0.0 && scene.reflection_coeff < 0.0)
    throw ConfigError("scene: custom rooms need t60 or reflection_coeff");
  if (scene.reflection_coeff >= 1.0) throw ConfigError("scene.reflection_coeff must lie in [0, 1)");
}

ConfigBundle default_config() { return with_seed(ConfigBundle{}, 1); }

ConfigBundle with_seed(ConfigBundle b, std::uint64_t seed) {
  b.seed = seed;
  b.campaign.seed = seed;
  b.synth.seed = seed;
  b.pipeline.cluster.seed = seed;
  return b;
}

ConfigBundle parse_config(const std::string& text) {
  json root;
  try {
    root = text.find_first_not_of(" \t\r\n") == std::string::npos ? json::object() : json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  ConfigBundle b;
  Section top(root, "");
  top.get("seed", b.seed);
  if (const json* a = top.find("array")) {
    try {
      b.array = a->is_string() ? array_preset(a->get<std::string>()) : parse_array_descriptor(a->dump());
    } catch (const ConfigError& e) {
      throw ConfigError(std::string("array: ") + e.what());
    }
  }
  if (auto s = top.child("scene")) {
    auto& sc = b.scene;
    s->get("room_preset", sc.room_preset);
    s->vec3("dims", sc.dims);
    s->get("t60", sc.t60);
    s->get("reflection_coeff", sc.reflection_coeff);
    std::string calibration(to_string(sc.calibration));
    s->get("calibration", calibration);
    check(calibration == "sabine" || calibration == "schroeder", "scene.calibration",
          "expected \"sabine\" or \"schroeder\"");
    sc.calibration = calibration_from_string(calibration);
    std::string placement = sc.sample_positions ? "sample" : "fixed";
    s->get("placement", placement);
    check(placement == "sample" || placement == "fixed", "scene.placement", "expected \"sample\" or \"fixed\"");
    sc.sample_positions = placement == "sample";
    s->vec3("source_position", sc.source_position);
    s->vec3("array_position", sc.array_position);
    s->get("noise_level", sc.noise_level);
    s->get("fs", sc.fs);
    s->get("max_delay", sc.max_delay);
    s->get("sim_max_freq", sc.sim_max_freq);
    if (auto src = s->child("source")) read_source(*src, sc.source);
    if (auto pr = s->child("placement_rules")) read_placement(*pr, sc.placement);
    s->finish();
  }
  auto& p = b.pipeline;
  if (auto s = top.child("stft")) {
    s->get("window_seconds", p.stft.window_seconds);
    s->get("overlap", p.stft.overlap);
    s->finish();
    check(p.stft.window_seconds > 0.0, "stft.window_seconds", "must be positive");
    check(p.stft.overlap >= 0.0 && p.stft.overlap < 1.0, "stft.overlap", "must lie in [0, 1)");
  }
  if (auto s = top.child("bands")) {
    s->get("f_lo", p.bands.f_lo);
    s->get("f_hi", p.bands.f_hi);
    s->get("bandwidth", p.bands.bandwidth);
    s->get("n_bands", p.bands.n_bands);
    s->get("bins_per_band", p.bands.bins_per_band);
    s->finish();
    check(p.bands.n_bands >= 1, "bands.n_bands", "must be >= 1");
    check(p.bands.f_lo + p.bands.bandwidth <= p.bands.f_hi, "bands.bandwidth", "f_lo + bandwidth exceeds f_hi");
  }
  if (auto s = top.child("scm")) {
    s->get("frames_per_group", p.frames_per_group);
    s->get("advance", p.group_advance);
    s->finish();
  }
  if (auto s = top.child("grid")) {
    s->get("size", p.grid_size);
    s->get("scheme", p.grid_scheme);
    s->finish();
    check(p.grid_scheme == "fibonacci" || p.grid_scheme == "near-uniform", "grid.scheme",
          "expected \"fibonacci\" or \"near-uniform\"");
  }
  if (auto s = top.child("focusing")) {
    s->get("rcond", p.focusing_rcond);
    s->get("cache_dir", p.cache_dir);
    s->finish();
  }
  if (auto s = top.child("detector")) {
    auto& d = p.detector;
    s->get("rho_min", d.rho_min);
    s->get("omega_th_deg", d.omega_th_deg);
    s->get("eps_u", d.eps_u);
    s->get("s_max", d.s_max);
    s->get("delay_min", d.delays.min);
    s->get("delay_max", d.delays.max);
    s->get("delay_step", d.delays.step);
    Direction dir;
    if (s->find("direct_doa")) {
      s->direction("direct_doa", dir);
      d.direct_doa = dir;
    }
    s->get("dedup_tau", d.dedup_tau);
    s->get("dedup_angle_deg", d.dedup_angle_deg);
    s->get("sidelobe_suppression", d.sidelobe_suppression);
    s->get("reject_direct_atoms", d.reject_direct_atoms);
    s->get("require_omp_fit", d.require_omp_fit);
    s->finish();
    check(d.rho_min > 0.0 && d.rho_min <= 1.0, "detector.rho_min", "must lie in (0, 1]");
    check(d.s_max >= 1, "detector.s_max", "must be >= 1");
    check(d.eps_u >= 0.0, "detector.eps_u", "must be >= 0");
    check(d.omega_th_deg > 0.0, "detector.omega_th_deg", "must be positive");
  }
  if (auto s = top.child("clustering")) {
    auto& c = p.cluster;
    s->get("gamma_omega_deg", c.gamma_omega_deg);
    s->get("gamma_tau", c.gamma_tau);
    s->get("eps", c.eps);
    s->get("density", c.density);
    s->get("density_per_observation", c.density_per_observation);
    s->get("observation_density", c.observation_density);
    s->get("min_pts_absolute", c.min_pts_absolute);
    s->get("subcluster", c.subcluster);
    s->get("split_threshold", c.split_threshold);
    s->get("split_requires_min_pts", c.split_requires_min_pts);
    s->get("kmeans_restarts", c.kmeans_restarts);
    s->get("max_depth", c.max_depth);
    s->get("azimuth_only", c.azimuth_only);
    s->finish();
    check(c.gamma_omega_deg > 0.0, "clustering.gamma_omega_deg", "must be positive");
    check(c.gamma_tau > 0.0, "clustering.gamma_tau", "must be positive");
    check(c.density > 0.0 && c.density <= 1.0, "clustering.density", "must lie in (0, 1]");
    check(c.observation_density > 0.0 && c.observation_density <= 1.0, "clustering.observation_density",
          "must lie in (0, 1]");
    check(c.split_threshold > 0.0, "clustering.split_threshold", "must be positive");
  }
  if (auto s = top.child("matching")) {
    std::string mode(to_string(p.match.mode));
    s->get("delay_tol", p.match.delay_tol);
    s->get("angle_tol_deg", p.match.angle_tol_deg);
    s->get("mode", mode);
    s->finish();
    try {
      p.match.mode = match_mode_from_string(mode);
    } catch (const ConfigError&) {
      throw ConfigError("matching.mode: expected full, azimuth-only or mirror-corrected");
    }
    check(p.match.delay_tol > 0.0, "matching.delay_tol", "must be positive");
    check(p.match.angle_tol_deg > 0.0, "matching.angle_tol_deg", "must be positive");
  }
  if (auto s = top.child("evaluation")) {
    s->get("truth_horizon", p.truth_horizon);
    s->finish();
  }
  if (auto s = top.child("campaign")) {
    auto& c = b.campaign;
    s->get("n_scenes", c.n_scenes);
    s->get("rooms", c.rooms);
    s->get("drr_min_db", c.drr_min_db);
    s->get("drr_max_db", c.drr_max_db);
    s->get("drr_window", c.drr_window);
    std::string calibration(to_string(c.calibration));
    s->get("calibration", calibration);
    check(calibration == "sabine" || calibration == "schroeder", "campaign.calibration",
          "expected \"sabine\" or \"schroeder\"");
    c.calibration = calibration_from_string(calibration);
    s->get("max_attempts", c.max_attempts);
    s->get("max_skip_fraction", c.max_skip_fraction);
    s->get("noise_level", c.noise_level);
    s->get("max_delay", c.max_delay);
    s->get("fs", c.fs);
    s->get("workers", c.workers);
    if (auto pr = s->child("placement")) read_placement(*pr, c.placement);
    if (auto src = s->child("source")) read_source(*src, c.source);
    s->finish();
    check(c.n_scenes >= 1, "campaign.n_scenes", "must be >= 1");
    for (int r : c.rooms) check(r >= 1 && r <= 4, "campaign.rooms", "room ids are 1..4");
  }
  if (auto s = top.child("synth")) {
    auto& sy = b.synth;
    std::string anchoring = sy.anchoring == SynthAnchoring::Drr ? "drr" : "direct";
    s->get("volume", sy.volume);
    s->get("t60", sy.t60);
    s->get("interval", sy.interval);
    s->get("horizon", sy.horizon);
    s->get("c", sy.c);
    s->direction("direct_doa", sy.direct_doa);
    s->get("anchoring", anchoring);
    s->get("source_distance", sy.source_distance);
    s->get("drr_db", sy.drr_db);
    s->finish();
    check(anchoring == "direct" || anchoring == "drr", "synth.anchoring", "expected \"direct\" or \"drr\"");
    sy.anchoring = anchoring == "drr" ? SynthAnchoring::Drr : SynthAnchoring::Direct;
    check(sy.volume > 0.0, "synth.volume", "must be positive");
    check(sy.interval > 0.0, "synth.interval", "must be positive");
  }
  top.finish();
  b = with_seed(std::move(b), b.seed);
  b.validate();
  return b;
}

ConfigBundle load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string config_json(const ConfigBundle& b) { return to_json(b).dump(2) + "\n"; }

void save_config(const std::string& path, const ConfigBundle& b) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path);
  out << config_json(b);
}

std::uint64_t config_hash(const ConfigBundle& b) {
  auto j = to_json(b);
  j["campaign"].erase("workers");
  j["focusing"].erase("cache_dir");
  return fnv1a64(j.dump());
}

bool operator==(const ConfigBundle& a, const ConfigBundle& b) { return config_json(a) == config_json(b); }

SceneConfig scene_from_config(const ConfigBundle& b) {
  const auto& s = b.scene;
  SceneConfig sc;
  sc.room_preset = s.room_preset;
  Eigen::Vector3d dims = s.dims;
  double t60 = s.t60;
  if (s.room_preset != 0) {
    const auto& preset = reference_room(s.room_preset);
    dims = preset.dims;
    if (t60 <= 0.0) t60 = preset.t60;
  }
  const double coeff = s.reflection_coeff >= 0.0 ? s.reflection_coeff
                                                 : reflection_coeff_for(RoomSpec::uniform(dims, 0.0), t60, s.calibration, s.fs);
  sc.room = RoomSpec::uniform(dims, coeff);
  sc.target_t60 = t60;
  if (s.sample_positions) {
    std::mt19937_64 rng(mix_seed(b.seed));
    const auto p = sample_placement(sc.room, rng, s.placement);
    sc.source_pos = p.source;
    sc.array_pos = p.array;
  } else {
    sc.source_pos = s.source_position;
    sc.array_pos = s.array_position;
    if (!sc.room.contains(sc.source_pos)) throw GeometryError("scene.source_position lies outside the room");
    if (!sc.room.contains(sc.array_pos)) throw GeometryError("scene.array_position lies outside the room");
    if ((sc.source_pos - sc.array_pos).norm() < 1e-6) throw GeometryError("scene: source and array coincide");
  }
  sc.array = b.array;
  sc.source = s.source;
  sc.noise_level = s.noise_level;
  sc.seed = b.seed;
  sc.fs = s.fs;
  sc.max_delay = s.max_delay;
  sc.sim_max_freq = s.sim_max_freq;
  return sc;
}

SceneConfig demo_scenario() {
  SceneConfig sc;
  const Eigen::Vector3d dims(12.0, 7.0, 5.0);
  sc.room_preset = 0;
  sc.target_t60 = 0.57;
  sc.room = RoomSpec::uniform(dims, fit_reflection_coeff(RoomSpec::uniform(dims, 0.0), 0.57));
  sc.source_pos = {5.5, 1.2, 1.7};
  sc.array_pos = {3.5, 3.0, 1.7};
  sc.array = em32_like();
  sc.seed = 1;
  return sc;
}

}  // namespace phalcor
