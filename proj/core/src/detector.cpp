#include "phalcor/detector.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <tuple>

#include <Eigen/Eigenvalues>
#include <Eigen/Geometry>
#include <Eigen/QR>

#include "phalcor/csv_io.hpp"
#include "phalcor/error.hpp"

namespace phalcor {
namespace {

double unit_angle(const Eigen::Vector3d& a, const Eigen::Vector3d& b) {
  return std::atan2(a.cross(b).norm(), a.dot(b));
}

// First index of the maximum.
template <typename Vec>
Eigen::Index argmax_first(const Vec& x) {
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < x.size(); ++i)
    if (x(i) > x(best)) best = i;
  return best;
}

}  // namespace

std::vector<double> DelayGrid::values() const {
  if (!(step > 0.0) || max < min) return {};
  const auto n = static_cast<std::size_t>(std::floor((max - min) / step + 1e-9)) + 1;
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = min + static_cast<double>(i) * step;
  return v;
}

void DetectorConfig::validate() const {
  if (!(rho_min > 0.0 && rho_min <= 1.0)) throw ConfigError("detector.rho_min must lie in (0, 1]");
  if (!(omega_th_deg > 0.0 && omega_th_deg <= 180.0)) throw ConfigError("detector.omega_th_deg must lie in (0, 180]");
  if (!(eps_u >= 0.0)) throw ConfigError("detector.eps_u must be >= 0");
  if (s_max < 1) throw ConfigError("detector.s_max must be >= 1");
  if (!(delays.step > 0.0) || delays.min < 0.0 || delays.max < delays.min)
    throw ConfigError("detector.delays: need 0 <= min <= max and step > 0");
  if (!(dedup_tau >= 0.0) || !(dedup_angle_deg >= 0.0)) throw ConfigError("detector: dedup settings must be >= 0");
}

SteeringDictionary make_dictionary(const ArrayGeometry& array, double frequency, const DirectionGrid& grid, double c) {
  SteeringDictionary d;
  d.frequency = frequency;
  d.grid = grid;
  d.units = grid.unit_vectors();
  d.atoms = steering_matrix(array, frequency, grid, c).entries;
  d.norms = d.atoms.colwise().norm().transpose();
  d.normalized = d.atoms;
  for (Eigen::Index g = 0; g < d.atoms.cols(); ++g)
    if (d.norms(g) > 0.0) d.normalized.col(g) /= d.norms(g);
  return d;
}

std::vector<double> alignment_weights(std::span<const Eigen::MatrixXcd> r) {
  std::vector<double> w(r.size(), 0.0);
  double total = 0.0;
  for (std::size_t j = 0; j < r.size(); ++j) {
    const double tr = r[j].trace().real();
    if (tr > 0.0) {
      w[j] = 1.0 / tr;
      total += w[j];
    }
  }
  if (total > 0.0)
    for (auto& x : w) x /= total;
  return w;
}

PhaseAligned phase_align(std::span<const Eigen::MatrixXcd> r, std::span<const double> offsets, double tau) {
  if (r.size() != offsets.size()) throw ConfigError("phase_align: bins and offsets differ in length");
  PhaseAligned out;
  out.tau = tau;
  const auto q = r.empty() ? 0 : r[0].rows();
  out.m = Eigen::MatrixXcd::Zero(q, q);
  const auto w = alignment_weights(r);
  out.degenerate = std::all_of(w.begin(), w.end(), [](double x) { return x == 0.0; });
  for (std::size_t j = 0; j < r.size(); ++j)
    if (w[j] != 0.0) out.m += (w[j] * std::polar(1.0, 2.0 * kPi * tau * offsets[j])) * r[j];
  return out;
}

namespace {

Eigen::MatrixXd phase_kernel(std::span<const double> offsets, std::span<const double> taus) {
  const auto j_count = static_cast<Eigen::Index>(offsets.size());
  const auto t_count = static_cast<Eigen::Index>(taus.size());
  Eigen::MatrixXd k(j_count, 2 * t_count);
  for (Eigen::Index j = 0; j < j_count; ++j)
    for (Eigen::Index t = 0; t < t_count; ++t) {
      const double phase = 2.0 * kPi * taus[static_cast<std::size_t>(t)] * offsets[static_cast<std::size_t>(j)];
      k(j, t) = std::cos(phase);
      k(j, t_count + t) = std::sin(phase);
    }
  return k;
}

// R(f_j) is Hermitian, so only pairs q <= q' are aligned. With A, B the real
// and imaginary parts of R(q, q') and C, S the cosine and sine kernels:
//   Rbar(q, q') = (AC - BS) + i(AS + BC),  Rbar(q', q) = (AC + BS) + i(AS - BC).
std::vector<Eigen::MatrixXcd> aligned_from_kernel(std::span<const Eigen::MatrixXcd> r, const std::vector<double>& w,
                                                  const Eigen::MatrixXd& kernel) {
  const auto q = r.empty() ? Eigen::Index{0} : r[0].rows();
  const Eigen::Index pairs = q * (q + 1) / 2;
  const auto j_count = static_cast<Eigen::Index>(r.size());
  const Eigen::Index t_count = kernel.cols() / 2;
  Eigen::MatrixXd x(2 * pairs, j_count);
  for (Eigen::Index j = 0; j < j_count; ++j) {
    const auto& rj = r[static_cast<std::size_t>(j)];
    const double wj = w[static_cast<std::size_t>(j)];
    Eigen::Index p = 0;
    for (Eigen::Index b = 0; b < q; ++b)
      for (Eigen::Index a = 0; a <= b; ++a, ++p) {
        x(p, j) = wj * rj(a, b).real();
        x(pairs + p, j) = wj * rj(a, b).imag();
      }
  }
  const Eigen::MatrixXd z = x * kernel;
  std::vector<Eigen::MatrixXcd> out(static_cast<std::size_t>(t_count), Eigen::MatrixXcd(q, q));
  for (Eigen::Index t = 0; t < t_count; ++t) {
    auto& m = out[static_cast<std::size_t>(t)];
    Eigen::Index p = 0;
    for (Eigen::Index b = 0; b < q; ++b)
      for (Eigen::Index a = 0; a <= b; ++a, ++p) {
        const double ac = z(p, t), as = z(p, t_count + t);
        const double bc = z(pairs + p, t), bs = z(pairs + p, t_count + t);
        m(a, b) = cplx(ac - bs, as + bc);
        if (a != b) m(b, a) = cplx(ac + bs, as - bc);
      }
  }
  return out;
}

}  // namespace

std::vector<Eigen::MatrixXcd> phase_align_batch(std::span<const Eigen::MatrixXcd> r, std::span<const double> offsets,
                                                std::span<const double> taus) {
  if (r.size() != offsets.size()) throw ConfigError("phase_align: bins and offsets differ in length");
  return aligned_from_kernel(r, alignment_weights(r), phase_kernel(offsets, taus));
}

Rank1 rank1_approx(const Eigen::MatrixXcd& m) {
  Rank1 out;
  const auto n = m.cols();
  out.u = Eigen::VectorXcd::Zero(m.rows());
  out.v = Eigen::VectorXcd::Zero(n);
  if (n == 0 || m.rows() == 0) return out;
  Eigen::MatrixXcd gram(n, n);
  gram.setZero();
  gram.selfadjointView<Eigen::Lower>().rankUpdate(m.adjoint());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(gram);
  const double lambda = std::max(0.0, eig.eigenvalues()(n - 1));
  out.v = eig.eigenvectors().col(n - 1);
  out.sigma = std::sqrt(lambda);
  if (out.sigma > 0.0) {
    out.u = m * out.v / out.sigma;
    const double un = out.u.norm();
    if (un > 0.0) out.u /= un;
  } else {
    out.u(0) = 1.0;
  }
  return out;
}

DirectMatch direct_sound_match(const Eigen::VectorXcd& v, const SteeringDictionary& dict) {
  if (dict.size() == 0) throw ConfigError("direct_sound_match: empty dictionary");
  const Eigen::VectorXd corr = (dict.normalized.adjoint() * v).cwiseAbs();
  const auto g = argmax_first(corr);
  return {corr(g), static_cast<std::size_t>(g), dict.grid[static_cast<std::size_t>(g)]};
}

OmpResult omp_doa(const Eigen::VectorXcd& u, const SteeringDictionary& dict, double eps_u, int s_max) {
  if (s_max < 1) throw ConfigError("omp: s_max must be >= 1");
  OmpResult out;
  const double unorm = u.norm();
  if (unorm == 0.0 || dict.size() == 0) return out;
  std::vector<Eigen::Index> sel;
  Eigen::VectorXcd residual = u;
  Eigen::VectorXcd coef;
  const auto max_atoms = std::min<Eigen::Index>(s_max, static_cast<Eigen::Index>(dict.size()));
  while (static_cast<Eigen::Index>(sel.size()) < max_atoms) {
    Eigen::VectorXd scores = (dict.normalized.adjoint() * residual).cwiseAbs();
    for (auto s : sel) scores(s) = -1.0;
    sel.push_back(argmax_first(scores));
    Eigen::MatrixXcd a(u.size(), static_cast<Eigen::Index>(sel.size()));
    for (std::size_t i = 0; i < sel.size(); ++i) a.col(static_cast<Eigen::Index>(i)) = dict.normalized.col(sel[i]);
    coef = a.colPivHouseholderQr().solve(u);
    residual = u - a * coef;
    out.residual_norms.push_back(residual.norm());
    if (residual.norm() <= eps_u * unorm) break;
  }
  for (std::size_t i = 0; i < sel.size(); ++i) {
    const auto g = sel[i];
    const double n = dict.norms(g);
    out.atoms.push_back({static_cast<std::size_t>(g), dict.grid[static_cast<std::size_t>(g)],
                         n > 0.0 ? coef(static_cast<Eigen::Index>(i)) / n : cplx{}});
  }
  return out;
}

BandScanner::BandScanner(const Band& band, const SteeringDictionary& dict, const DetectorConfig& cfg)
    : dict_(&dict), cfg_(cfg), taus_(cfg.delays.values()), offsets_(band.offsets) {
  kernel_ = phase_kernel(offsets_, taus_);
}

void BandScanner::scan(const ScmStack& stack, DelayScan& out) const {
  if (stack.r.size() != offsets_.size()) throw ConfigError("scan: stack and band sizes differ");
  if (out.taus.empty()) out.taus = taus_;
  const auto w = alignment_weights(stack.r);
  const auto q = stack.r.empty() ? Eigen::Index{0} : stack.r[0].rows();

  if (out.band_power.size() <= static_cast<std::size_t>(stack.band))
    out.band_power.resize(static_cast<std::size_t>(stack.band) + 1);
  auto& power = out.band_power[static_cast<std::size_t>(stack.band)];
  if (power.size() == 0) power = Eigen::MatrixXcd::Zero(q, q);
  for (std::size_t j = 0; j < stack.r.size(); ++j)
    if (w[j] != 0.0) power += w[j] * stack.r[j];

  const auto aligned = aligned_from_kernel(stack.r, w, kernel_);
  const auto t_count = static_cast<Eigen::Index>(aligned.size());
  Eigen::MatrixXcd v(q, t_count);
  std::vector<Rank1> decomp;
  decomp.reserve(aligned.size());
  for (Eigen::Index t = 0; t < t_count; ++t) {
    decomp.push_back(rank1_approx(aligned[static_cast<std::size_t>(t)]));
    v.col(t) = decomp.back().v;
  }
  const Eigen::MatrixXd corr = (dict_->normalized.adjoint() * v).cwiseAbs();
  for (Eigen::Index t = 0; t < t_count; ++t) {
    ScanCell cell;
    cell.band = stack.band;
    cell.group = stack.group;
    cell.tau_index = static_cast<int>(t);
    cell.sigma = decomp[static_cast<std::size_t>(t)].sigma;
    const auto g = argmax_first(corr.col(t));
    cell.rho = cell.sigma > 0.0 ? corr(g, t) : 0.0;
    cell.direct_index = static_cast<std::size_t>(g);
    if (cell.rho >= cfg_.rho_min) cell.u = std::move(decomp[static_cast<std::size_t>(t)].u);
    out.cells.push_back(std::move(cell));
  }
}

Direction estimate_direct_doa(const DelayScan& scan, const std::vector<SteeringDictionary>& dicts,
                              const DetectorConfig& cfg) {
  if (dicts.empty()) throw ConfigError("estimate_direct_doa: no dictionaries");
  const auto& grid = dicts.front().grid;
  const auto& units = dicts.front().units;

  std::vector<double> rhos;
  rhos.reserve(scan.cells.size());
  for (const auto& c : scan.cells) rhos.push_back(c.rho);
  std::map<std::size_t, double> counts;
  if (!rhos.empty()) {
    std::vector<double> sorted = rhos;
    const auto k = static_cast<std::size_t>(std::ceil(0.1 * static_cast<double>(sorted.size())));
    std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(k - 1), sorted.end(),
                     std::greater<>());
    const double threshold = std::max(sorted[k - 1], cfg.rho_min);
    for (const auto& c : scan.cells)
      if (c.rho >= threshold && c.sigma > 0.0) counts[c.direct_index] += 1.0;
  }

  if (!counts.empty()) {
    std::size_t best = counts.begin()->first;
    double best_cost = std::numeric_limits<double>::infinity();
    for (const auto& [i, _] : counts) {
      double cost = 0.0;
      for (const auto& [j, n] : counts)
        if (i != j) cost += n * unit_angle(units.col(static_cast<Eigen::Index>(i)), units.col(static_cast<Eigen::Index>(j)));
      if (cost < best_cost * (1.0 - 1e-12)) {
        best_cost = cost;
        best = i;
      }
    }
    return grid[best];
  }

  Eigen::VectorXd power = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(grid.size()));
  for (std::size_t b = 0; b < scan.band_power.size() && b < dicts.size(); ++b) {
    const auto& p = scan.band_power[b];
    if (p.size() == 0) continue;
    const Eigen::MatrixXcd proj = p * dicts[b].normalized;
    power += (dicts[b].normalized.conjugate().cwiseProduct(proj)).colwise().sum().real().transpose();
  }
  return grid[static_cast<std::size_t>(argmax_first(power))];
}

std::vector<DetectionCandidate> extract_candidates(const DelayScan& scan, const std::vector<SteeringDictionary>& dicts,
                                                   const DetectorConfig& cfg, const Direction& direct) {
  const double th = deg2rad(cfg.omega_th_deg);
  const Eigen::Vector3d d0 = direct.unit_vector();
  std::vector<DetectionCandidate> out;
  for (const auto& cell : scan.cells) {
    if (cell.u.size() == 0 || cell.rho < cfg.rho_min) continue;
    const auto& dict = dicts.at(static_cast<std::size_t>(cell.band));
    if (unit_angle(dict.units.col(static_cast<Eigen::Index>(cell.direct_index)), d0) > th) continue;
    const auto omp = omp_doa(cell.u, dict, cfg.eps_u, cfg.s_max);
    if (cfg.require_omp_fit && !omp.residual_norms.empty() && omp.residual_norms.back() > cfg.eps_u * cell.u.norm())
      continue;
    for (const auto& atom : omp.atoms) {
      if (cfg.reject_direct_atoms && unit_angle(dict.units.col(static_cast<Eigen::Index>(atom.index)), d0) <= th)
        continue;
      DetectionCandidate c;
      c.tau = scan.taus.at(static_cast<std::size_t>(cell.tau_index));
      c.doa = atom.doa;
      c.grid_index = atom.index;
      c.tau_index = cell.tau_index;
      c.coeff_mag = std::abs(atom.coefficient);
      c.rho = cell.rho;
      c.sigma = cell.sigma;
      c.band = cell.band;
      c.group = cell.group;
      out.push_back(c);
    }
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return std::tie(a.band, a.group, a.tau_index, a.grid_index) < std::tie(b.band, b.group, b.tau_index, b.grid_index);
  });
  return out;
}

std::vector<DetectionCandidate> suppress_duplicates(std::vector<DetectionCandidate> cands, const DetectorConfig& cfg) {
  const double window = cfg.sidelobe_suppression ? std::numeric_limits<double>::infinity() : cfg.dedup_tau;
  const double angle = deg2rad(cfg.dedup_angle_deg);
  auto stronger = [](const DetectionCandidate& a, const DetectionCandidate& b) {
    if (a.band != b.band) return a.band < b.band;
    if (a.group != b.group) return a.group < b.group;
    if (a.sigma != b.sigma) return a.sigma > b.sigma;
    if (a.coeff_mag != b.coeff_mag) return a.coeff_mag > b.coeff_mag;
    return std::tie(a.tau_index, a.grid_index) < std::tie(b.tau_index, b.grid_index);
  };
  std::sort(cands.begin(), cands.end(), stronger);
  std::vector<DetectionCandidate> kept;
  std::size_t start = 0;
  for (std::size_t i = 0; i < cands.size(); ++i) {
    if (i > 0 && (cands[i].band != cands[i - 1].band || cands[i].group != cands[i - 1].group)) start = kept.size();
    const Eigen::Vector3d ui = cands[i].doa.unit_vector();
    bool dominated = false;
    for (std::size_t k = start; k < kept.size() && !dominated; ++k)
      dominated = std::abs(kept[k].tau - cands[i].tau) <= window + 1e-12 &&
                  unit_angle(kept[k].doa.unit_vector(), ui) <= angle + 1e-12;
    if (!dominated) kept.push_back(cands[i]);
  }
  std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    return std::tie(a.band, a.group, a.tau_index, a.grid_index) < std::tie(b.band, b.group, b.tau_index, b.grid_index);
  });
  return kept;
}

Detections detect_candidates(const std::vector<ScmStack>& stacks, const BandPlan& plan,
                             const std::vector<SteeringDictionary>& dicts, const DetectorConfig& cfg) {
  cfg.validate();
  if (dicts.size() != plan.bands.size()) throw ConfigError("detect: one dictionary per band is required");
  std::vector<BandScanner> scanners;
  for (std::size_t b = 0; b < plan.bands.size(); ++b) scanners.emplace_back(plan.bands[b], dicts[b], cfg);
  DelayScan scan;
  for (const auto& s : stacks) scanners.at(static_cast<std::size_t>(s.band)).scan(s, scan);
  Detections d;
  d.observations = stacks.size();
  d.direct = cfg.direct_doa ? *cfg.direct_doa : estimate_direct_doa(scan, dicts, cfg);
  d.raw = extract_candidates(scan, dicts, cfg, d.direct);
  d.candidates = suppress_duplicates(d.raw, cfg);
  return d;
}

void write_candidates_csv(const std::string& path, const std::vector<DetectionCandidate>& candidates) {
  CsvTable t;
  t.header = {"band", "group", "tau_s", "elevation_rad", "azimuth_rad", "rho", "coeff_mag"};
  for (const auto& c : candidates)
    t.rows.push_back({std::to_string(c.band), std::to_string(c.group), csv_number(c.tau), csv_number(c.doa.elevation),
                      csv_number(c.doa.azimuth), csv_number(c.rho), csv_number(c.coeff_mag)});
  write_csv(path, t);
}

std::vector<DetectionCandidate> read_candidates_csv(const std::string& path) {
  const auto t = read_csv(path);
  const auto cb = t.column("band"), cg = t.column("group"), ct = t.column("tau_s"), ce = t.column("elevation_rad"),
             ca = t.column("azimuth_rad"), cr = t.column("rho"), cc = t.column("coeff_mag");
  std::vector<DetectionCandidate> out;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    DetectionCandidate c;
    c.band = static_cast<int>(t.number(i, cb));
    c.group = static_cast<int>(t.number(i, cg));
    c.tau = t.number(i, ct);
    c.doa = {t.number(i, ce), t.number(i, ca)};
    c.rho = t.number(i, cr);
    c.coeff_mag = t.number(i, cc);
    out.push_back(c);
  }
  return out;
}

}  // namespace phalcor
