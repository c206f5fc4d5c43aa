#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace phalcor {

inline constexpr const char* kVersion = "0.3.0";

struct ManifestFile {
  std::string name;  // relative to the output directory
  std::uint64_t hash = 0;
  std::uint64_t bytes = 0;
};

/// Record of one CLI run. Timings are only serialized when requested, so the
/// default manifest is itself reproducible.
struct RunManifest {
  std::string command;
  std::uint64_t config_hash = 0;
  std::uint64_t seed = 0;
  std::vector<std::pair<std::string, std::string>> versions;
  std::vector<std::pair<std::string, double>> timings;
  std::vector<ManifestFile> files;
  bool include_timings = false;

  /// Hashes `dir/name` and lists it; names are kept sorted.
  void add_file(const std::string& dir, const std::string& name);
  std::string json() const;
  void write(const std::string& dir) const;
};

/// Versions of the pipeline modules and linked libraries.
std::vector<std::pair<std::string, std::string>> module_versions();

RunManifest read_manifest(const std::string& path);

}  // namespace phalcor
