#include "phalcor/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <tuple>

#include <Eigen/Geometry>

#include "phalcor/csv_io.hpp"
#include "phalcor/error.hpp"
#include "phalcor/hash.hpp"

namespace phalcor {
namespace {

constexpr double kTol = 1e-12;

struct Prepared {
  std::vector<double> tau;
  Eigen::Matrix3Xd units;
};

Prepared prepare(std::span<const ClusterPoint> points, bool azimuth_only) {
  Prepared p;
  p.tau.reserve(points.size());
  p.units.resize(3, static_cast<Eigen::Index>(points.size()));
  for (std::size_t i = 0; i < points.size(); ++i) {
    p.tau.push_back(points[i].tau);
    const Direction d = azimuth_only ? Direction{kPi / 2, points[i].doa.azimuth} : points[i].doa;
    p.units.col(static_cast<Eigen::Index>(i)) = d.unit_vector();
  }
  return p;
}

double prepared_distance(const Prepared& p, std::size_t i, std::size_t j, double g_omega, double g_tau) {
  const auto a = p.units.col(static_cast<Eigen::Index>(i));
  const auto b = p.units.col(static_cast<Eigen::Index>(j));
  const double angle = std::atan2(a.cross(b).norm(), a.dot(b));
  const double x = angle / g_omega;
  const double y = (p.tau[i] - p.tau[j]) / g_tau;
  return std::sqrt(x * x + y * y);
}

struct UnionFind {
  std::vector<std::size_t> parent;
  explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  std::size_t find(std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
};

bool cluster_order(const Cluster& a, const Cluster& b) {
  if (a.weight != b.weight) return a.weight > b.weight;
  if (a.center_tau != b.center_tau) return a.center_tau < b.center_tau;
  if (a.center_doa.azimuth != b.center_doa.azimuth) return a.center_doa.azimuth < b.center_doa.azimuth;
  return a.center_doa.elevation < b.center_doa.elevation;
}

}  // namespace

void ClusterConfig::validate() const {
  if (!(gamma_omega_deg > 0.0) || !(gamma_tau > 0.0) || !(eps > 0.0))
    throw ConfigError("clustering: gamma_omega_deg, gamma_tau and eps must be positive");
  if (!(density > 0.0 && density <= 1.0)) throw ConfigError("clustering.density must lie in (0, 1]");
  if (!(observation_density > 0.0 && observation_density <= 1.0))
    throw ConfigError("clustering.observation_density must lie in (0, 1]");
  if (min_pts_absolute < 0) throw ConfigError("clustering.min_pts_absolute must be >= 0");
  if (!(split_threshold > 0.0)) throw ConfigError("clustering.split_threshold must be positive");
  if (kmeans_restarts < 1 || max_depth < 0) throw ConfigError("clustering: kmeans_restarts >= 1 and max_depth >= 0");
}

std::vector<ClusterPoint> to_points(std::span<const DetectionCandidate> candidates) {
  std::vector<ClusterPoint> out;
  out.reserve(candidates.size());
  for (const auto& c : candidates) out.push_back({c.tau, c.doa});
  return out;
}

double weighted_distance(const ClusterPoint& a, const ClusterPoint& b, const ClusterConfig& cfg) {
  const double angle = cfg.azimuth_only ? azimuth_distance(a.doa, b.doa) : angular_distance(a.doa, b.doa);
  const double x = angle / deg2rad(cfg.gamma_omega_deg);
  const double y = (a.tau - b.tau) / cfg.gamma_tau;
  return std::sqrt(x * x + y * y);
}

Cluster make_cluster(std::vector<std::size_t> members, std::span<const ClusterPoint> points, bool azimuth_only) {
  Cluster c;
  std::sort(members.begin(), members.end());
  c.members = std::move(members);
  c.weight = c.members.size();
  if (c.members.empty()) return c;
  std::vector<double> taus;
  Eigen::Vector3d sum = Eigen::Vector3d::Zero();
  for (auto i : c.members) {
    taus.push_back(points[i].tau);
    const Direction d = azimuth_only ? Direction{kPi / 2, points[i].doa.azimuth} : points[i].doa;
    sum += d.unit_vector();
  }
  std::sort(taus.begin(), taus.end());
  const auto n = taus.size();
  c.center_tau = n % 2 ? taus[n / 2] : 0.5 * (taus[n / 2 - 1] + taus[n / 2]);
  if (sum.norm() > 1e-12)
    c.center_doa = Direction::from_vector(sum);
  else
    c.center_doa = azimuth_only ? Direction{kPi / 2, points[c.members.front()].doa.azimuth} : points[c.members.front()].doa;
  return c;
}

int min_points(std::size_t points, const ClusterConfig& cfg, std::size_t observations) {
  if (cfg.min_pts_absolute > 0) return cfg.min_pts_absolute;
  const double x = cfg.density_per_observation && observations > 0
                       ? cfg.observation_density * static_cast<double>(observations)
                       : cfg.density * static_cast<double>(points);
  return std::max(2, static_cast<int>(std::ceil(x - 1e-9)));
}

std::vector<Cluster> dbscan_cluster(std::span<const ClusterPoint> points, const ClusterConfig& cfg,
                                    std::size_t observations) {
  cfg.validate();
  const std::size_t n = points.size();
  if (n == 0) return {};
  const auto prep = prepare(points, cfg.azimuth_only);
  const double g_omega = deg2rad(cfg.gamma_omega_deg);
  const double window = cfg.eps * cfg.gamma_tau;
  const int min_pts = min_points(n, cfg, observations);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return prep.tau[a] < prep.tau[b]; });
  std::vector<double> sorted_tau(n);
  for (std::size_t k = 0; k < n; ++k) sorted_tau[k] = prep.tau[order[k]];

  auto for_neighbors = [&](std::size_t i, auto&& fn) {
    const double t = prep.tau[i];
    auto lo = std::lower_bound(sorted_tau.begin(), sorted_tau.end(), t - window - kTol) - sorted_tau.begin();
    for (auto k = static_cast<std::size_t>(lo); k < n && sorted_tau[k] <= t + window + kTol; ++k) {
      const std::size_t j = order[k];
      const double d = prepared_distance(prep, i, j, g_omega, cfg.gamma_tau);
      if (d <= cfg.eps + kTol) fn(j, d);
    }
  };

  std::vector<char> core(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    int count = 0;
    for_neighbors(i, [&](std::size_t, double) { ++count; });
    core[i] = count >= min_pts;
  }

  UnionFind uf(n);
  for (std::size_t i = 0; i < n; ++i)
    if (core[i])
      for_neighbors(i, [&](std::size_t j, double) {
        if (core[j]) uf.unite(i, j);
      });

  auto key = [&](std::size_t i) { return std::make_tuple(points[i].tau, points[i].doa.elevation, points[i].doa.azimuth, i); };
  std::vector<std::ptrdiff_t> label(n, -1);
  for (std::size_t i = 0; i < n; ++i)
    if (core[i]) label[i] = static_cast<std::ptrdiff_t>(uf.find(i));
  for (std::size_t i = 0; i < n; ++i) {
    if (core[i]) continue;
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_j = n;
    for_neighbors(i, [&](std::size_t j, double d) {
      if (!core[j]) return;
      if (d < best - kTol || (std::abs(d - best) <= kTol && best_j < n && key(j) < key(best_j))) {
        best = d;
        best_j = j;
      }
    });
    if (best_j < n) label[i] = static_cast<std::ptrdiff_t>(uf.find(best_j));
  }

  std::vector<std::vector<std::size_t>> groups(n);
  for (std::size_t i = 0; i < n; ++i)
    if (label[i] >= 0) groups[static_cast<std::size_t>(label[i])].push_back(i);
  std::vector<Cluster> clusters;
  for (auto& g : groups)
    if (!g.empty()) clusters.push_back(make_cluster(std::move(g), points, cfg.azimuth_only));
  std::sort(clusters.begin(), clusters.end(), cluster_order);
  return clusters;
}

namespace {

using Embedding = Eigen::MatrixXd;  // dims x members

Embedding embed(const Cluster& c, std::span<const ClusterPoint> points, const ClusterConfig& cfg) {
  const double g_omega = deg2rad(cfg.gamma_omega_deg);
  Embedding x(4, static_cast<Eigen::Index>(c.members.size()));
  for (std::size_t k = 0; k < c.members.size(); ++k) {
    const auto& p = points[c.members[k]];
    const Direction d = cfg.azimuth_only ? Direction{kPi / 2, p.doa.azimuth} : p.doa;
    x(0, static_cast<Eigen::Index>(k)) = p.tau / cfg.gamma_tau;
    x.block<3, 1>(1, static_cast<Eigen::Index>(k)) = d.unit_vector() / g_omega;
  }
  return x;
}

struct TwoMeans {
  std::vector<int> labels;
  double inertia = std::numeric_limits<double>::infinity();
};

TwoMeans two_means(const Embedding& x, std::mt19937_64& rng) {
  const auto n = x.cols();
  std::uniform_int_distribution<Eigen::Index> pick(0, n - 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Eigen::Matrix<double, 4, 2> centers;
  centers.col(0) = x.col(pick(rng));
  Eigen::VectorXd d2 = (x.colwise() - centers.col(0)).colwise().squaredNorm().transpose();
  const double total = d2.sum();
  Eigen::Index second = 0;
  if (total > 0.0) {
    double r = unit(rng) * total;
    for (second = 0; second < n - 1; ++second) {
      r -= d2(second);
      if (r <= 0.0 && d2(second) > 0.0) break;
    }
  }
  centers.col(1) = x.col(second);

  TwoMeans out;
  out.labels.assign(static_cast<std::size_t>(n), 0);
  for (int iter = 0; iter < 100; ++iter) {
    bool changed = iter == 0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double a = (x.col(i) - centers.col(0)).squaredNorm();
      const double b = (x.col(i) - centers.col(1)).squaredNorm();
      const int l = b < a ? 1 : 0;
      if (out.labels[static_cast<std::size_t>(i)] != l) {
        out.labels[static_cast<std::size_t>(i)] = l;
        changed = true;
      }
    }
    Eigen::Matrix<double, 4, 2> next = Eigen::Matrix<double, 4, 2>::Zero();
    Eigen::Vector2d count = Eigen::Vector2d::Zero();
    for (Eigen::Index i = 0; i < n; ++i) {
      next.col(out.labels[static_cast<std::size_t>(i)]) += x.col(i);
      count(out.labels[static_cast<std::size_t>(i)]) += 1.0;
    }
    for (int k = 0; k < 2; ++k)
      if (count(k) > 0) centers.col(k) = next.col(k) / count(k);
    if (!changed) break;
  }
  out.inertia = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) out.inertia += (x.col(i) - centers.col(out.labels[static_cast<std::size_t>(i)])).squaredNorm();
  return out;
}

}  // namespace

std::vector<Cluster> subcluster_split(const Cluster& cluster, std::span<const ClusterPoint> points,
                                      const ClusterConfig& cfg, int min_pts, int depth) {
  if (cluster.members.size() < 2 || depth >= cfg.max_depth) return {cluster};
  const auto x = embed(cluster, points, cfg);
  std::mt19937_64 rng(mix_seed(cfg.seed ^ mix_seed(cluster.members.front() * 131 + cluster.members.size() * 7 +
                                                   static_cast<std::size_t>(depth))));
  TwoMeans best;
  for (int r = 0; r < cfg.kmeans_restarts; ++r) {
    auto t = two_means(x, rng);
    if (t.inertia < best.inertia) best = std::move(t);
  }
  std::vector<std::size_t> a, b;
  for (std::size_t k = 0; k < cluster.members.size(); ++k) (best.labels[k] == 0 ? a : b).push_back(cluster.members[k]);
  if (a.empty() || b.empty()) return {cluster};
  if (cfg.split_requires_min_pts && (a.size() < static_cast<std::size_t>(min_pts) || b.size() < static_cast<std::size_t>(min_pts)))
    return {cluster};
  auto ca = make_cluster(std::move(a), points, cfg.azimuth_only);
  auto cb = make_cluster(std::move(b), points, cfg.azimuth_only);
  const double d = weighted_distance({ca.center_tau, ca.center_doa}, {cb.center_tau, cb.center_doa}, cfg);
  if (!(d > cfg.split_threshold)) return {cluster};
  auto out = subcluster_split(ca, points, cfg, min_pts, depth + 1);
  auto more = subcluster_split(cb, points, cfg, min_pts, depth + 1);
  out.insert(out.end(), more.begin(), more.end());
  return out;
}

std::vector<Cluster> cluster_points(std::span<const ClusterPoint> points, const ClusterConfig& cfg,
                                    std::size_t observations) {
  auto clusters = dbscan_cluster(points, cfg, observations);
  if (!cfg.subcluster) return clusters;
  const int min_pts = min_points(points.size(), cfg, observations);
  std::vector<Cluster> out;
  for (const auto& c : clusters) {
    auto parts = subcluster_split(c, points, cfg, min_pts);
    out.insert(out.end(), parts.begin(), parts.end());
  }
  std::sort(out.begin(), out.end(), cluster_order);
  return out;
}

EstimateSet finalize_estimates(const std::vector<Cluster>& clusters, bool azimuth_only) {
  EstimateSet out;
  out.azimuth_only = azimuth_only;
  for (const auto& c : clusters) out.reflections.push_back({c.center_tau, c.center_doa, static_cast<double>(c.weight)});
  std::stable_sort(out.reflections.begin(), out.reflections.end(), [](const auto& a, const auto& b) {
    if (a.delay != b.delay) return a.delay < b.delay;
    return a.doa.azimuth < b.doa.azimuth;
  });
  return out;
}

std::vector<ClusterPoint> collapse_to_azimuth(std::span<const ClusterPoint> points) {
  std::vector<ClusterPoint> out(points.begin(), points.end());
  for (auto& p : out) p.doa.elevation = kPi / 2;
  return out;
}

EstimateSet collapse_to_azimuth(const EstimateSet& estimates) {
  EstimateSet out = estimates;
  out.azimuth_only = true;
  for (auto& r : out.reflections) r.doa.elevation = kPi / 2;
  return out;
}

void write_estimates_csv(const std::string& path, const EstimateSet& estimates) {
  CsvTable t;
  t.header = {"delay_s", "elevation_rad", "azimuth_rad", "weight"};
  for (const auto& r : estimates.reflections)
    t.rows.push_back({csv_number(r.delay),
                      csv_number(estimates.azimuth_only ? std::numeric_limits<double>::quiet_NaN() : r.doa.elevation),
                      csv_number(r.doa.azimuth), csv_number(r.weight)});
  write_csv(path, t);
}

EstimateSet read_estimates_csv(const std::string& path) {
  const auto t = read_csv(path);
  const auto cd = t.column("delay_s"), ce = t.column("elevation_rad"), ca = t.column("azimuth_rad"),
             cw = t.column("weight");
  EstimateSet out;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    ReflectionEstimate r;
    r.delay = t.number(i, cd);
    const double el = t.number(i, ce);
    if (std::isnan(el)) out.azimuth_only = true;
    r.doa = {std::isnan(el) ? kPi / 2 : el, t.number(i, ca)};
    r.weight = t.number(i, cw);
    out.reflections.push_back(r);
  }
  return out;
}

}  // namespace phalcor
