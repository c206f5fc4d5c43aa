#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "phalcor/array_model.hpp"
#include "phalcor/detector.hpp"

namespace phalcor {

struct ClusterConfig {
  double gamma_omega_deg = 15.0;
  double gamma_tau = 0.3e-3;
  double eps = 1.0;
  double density = 0.05;    // minPts = max(2, ceil(density * candidates))
  // When the number of (band, group) observations is known, minPts is
  // ceil(observation_density * observations) instead.
  bool density_per_observation = true;
  double observation_density = 0.4;
  int min_pts_absolute = 0; // overrides density when > 0
  bool subcluster = true;
  double split_threshold = 0.25;
  bool split_requires_min_pts = true;  // both children must hold >= minPts members
  int kmeans_restarts = 10;
  int max_depth = 3;
  bool azimuth_only = false;
  std::uint64_t seed = 0;

  void validate() const;
};

struct ClusterPoint {
  double tau = 0.0;
  Direction doa;
};

std::vector<ClusterPoint> to_points(std::span<const DetectionCandidate> candidates);

/// sqrt((dangle / gamma_omega)^2 + (dtau / gamma_tau)^2); dangle is the
/// great-circle angle, or the wrapped azimuth difference in azimuth-only mode.
double weighted_distance(const ClusterPoint& a, const ClusterPoint& b, const ClusterConfig& cfg);

struct Cluster {
  std::vector<std::size_t> members;  // ascending point indices
  double center_tau = 0.0;           // member median
  Direction center_doa;              // normalized mean of member unit vectors
  std::size_t weight = 0;
};

Cluster make_cluster(std::vector<std::size_t> members, std::span<const ClusterPoint> points, bool azimuth_only);

int min_points(std::size_t points, const ClusterConfig& cfg, std::size_t observations = 0);

/// DBSCAN with eps = cfg.eps under weighted_distance. Border points join the
/// cluster of their nearest core point, so the result does not depend on
/// input order. Sorted by descending weight, then center delay.
std::vector<Cluster> dbscan_cluster(std::span<const ClusterPoint> points, const ClusterConfig& cfg,
                                    std::size_t observations = 0);

/// Recursive 2-means split in the weighted coordinate space.
std::vector<Cluster> subcluster_split(const Cluster& cluster, std::span<const ClusterPoint> points,
                                      const ClusterConfig& cfg, int min_pts, int depth = 0);

/// dbscan_cluster followed by subcluster_split when enabled.
std::vector<Cluster> cluster_points(std::span<const ClusterPoint> points, const ClusterConfig& cfg,
                                    std::size_t observations = 0);

struct ReflectionEstimate {
  double delay = 0.0;
  Direction doa;
  double weight = 0.0;
};

struct EstimateSet {
  std::vector<ReflectionEstimate> reflections;  // ascending delay
  bool azimuth_only = false;
};

EstimateSet finalize_estimates(const std::vector<Cluster>& clusters, bool azimuth_only = false);

/// Projects every direction onto the horizontal plane (elevation pi/2).
std::vector<ClusterPoint> collapse_to_azimuth(std::span<const ClusterPoint> points);
EstimateSet collapse_to_azimuth(const EstimateSet& estimates);

/// Columns: delay_s, elevation_rad (nan in azimuth-only mode), azimuth_rad, weight.
void write_estimates_csv(const std::string& path, const EstimateSet& estimates);
EstimateSet read_estimates_csv(const std::string& path);

}  // namespace phalcor
