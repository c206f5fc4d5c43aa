#include "phalcor/manifest.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iterator>

#include <Eigen/Core>
#include <fftw3.h>
#include <fmt/core.h>
#include <json.hpp>

#include "phalcor/error.hpp"
#include "phalcor/hash.hpp"

namespace phalcor {

namespace fs = std::filesystem;

void RunManifest::add_file(const std::string& dir, const std::string& name) {
  std::ifstream in(fs::path(dir) / name, std::ios::binary);
  if (!in) throw IoError("cannot read " + (fs::path(dir) / name).string());
  const std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  ManifestFile f{name, fnv1a64(data), data.size()};
  auto it = std::find_if(files.begin(), files.end(), [&](const ManifestFile& m) { return m.name == name; });
  if (it != files.end()) {
    *it = f;
  } else {
    files.push_back(f);
  }
  std::sort(files.begin(), files.end(), [](const auto& a, const auto& b) { return a.name < b.name; });
}

std::string RunManifest::json() const {
  nlohmann::ordered_json j;
  j["command"] = command;
  j["config_hash"] = hex64(config_hash);
  j["seed"] = seed;
  auto& v = j["versions"] = nlohmann::ordered_json::object();
  for (const auto& [k, val] : versions) v[k] = val;
  if (include_timings) {
    auto& t = j["timings_s"] = nlohmann::ordered_json::object();
    for (const auto& [k, val] : timings) t[k] = val;
  }
  auto& out = j["files"] = nlohmann::ordered_json::array();
  for (const auto& f : files) out.push_back({{"name", f.name}, {"fnv1a64", hex64(f.hash)}, {"bytes", f.bytes}});
  return j.dump(2) + "\n";
}

void RunManifest::write(const std::string& dir) const {
  std::ofstream out(fs::path(dir) / "manifest.json", std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write manifest in " + dir);
  out << json();
}

std::vector<std::pair<std::string, std::string>> module_versions() {
  return {{"phalcor", kVersion},
          {"array-model", "1"},
          {"room-sim", "1"},
          {"stft-scm", "1"},
          {"focusing", "1"},
          {"detector", "1"},
          {"clustering", "1"},
          {"evaluation", "1"},
          {"synth-rir", "1"},
          {"eigen", fmt::format("{}.{}.{}", EIGEN_WORLD_VERSION, EIGEN_MAJOR_VERSION, EIGEN_MINOR_VERSION)},
          {"fftw", fftw_version}};
}

RunManifest read_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  RunManifest m;
  try {
    const auto j = nlohmann::ordered_json::parse(in);
    m.command = j.at("command").get<std::string>();
    m.config_hash = std::stoull(j.at("config_hash").get<std::string>(), nullptr, 16);
    m.seed = j.at("seed").get<std::uint64_t>();
    for (const auto& [k, v] : j.at("versions").items()) m.versions.emplace_back(k, v.get<std::string>());
    if (j.contains("timings_s")) {
      m.include_timings = true;
      for (const auto& [k, v] : j.at("timings_s").items()) m.timings.emplace_back(k, v.get<double>());
    }
    for (const auto& f : j.at("files"))
      m.files.push_back({f.at("name").get<std::string>(), std::stoull(f.at("fnv1a64").get<std::string>(), nullptr, 16),
                         f.at("bytes").get<std::uint64_t>()});
  } catch (const nlohmann::json::exception& e) {
    throw IoError(path + ": " + e.what());
  }
  return m;
}

}  // namespace phalcor
