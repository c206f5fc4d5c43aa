#include "phalcor/focusing.hpp"

#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>

#include <Eigen/SVD>

#include "phalcor/error.hpp"
#include "phalcor/hash.hpp"

namespace phalcor {
namespace {

constexpr char kMagic[8] = {'P', 'H', 'F', 'O', 'C', 'U', 'S', '1'};

struct Pinv {
  Eigen::MatrixXcd v_scaled;  // G x r, V Sigma^+
  Eigen::MatrixXcd u;         // Q x r
  bool truncated = false;
};

Pinv pseudo_inverse(const Eigen::MatrixXcd& h, double rcond) {
  Eigen::BDCSVD<Eigen::MatrixXcd> svd(h, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& s = svd.singularValues();
  const double cutoff = s.size() > 0 ? rcond * s(0) : 0.0;
  Eigen::Index rank = 0;
  while (rank < s.size() && s(rank) > cutoff) ++rank;
  Pinv p;
  p.truncated = rank < std::min(h.rows(), h.cols());
  p.u = svd.matrixU().leftCols(rank);
  p.v_scaled = svd.matrixV().leftCols(rank) * s.head(rank).cwiseInverse().asDiagonal();
  return p;
}

FocusingMatrix finish(const Eigen::MatrixXcd& h_f, const Eigen::MatrixXcd& h_f0, const Pinv& p) {
  FocusingMatrix out;
  out.t = (h_f0 * p.v_scaled) * p.u.adjoint();
  out.truncated = p.truncated;
  const double ref = h_f0.norm();
  const double scale = ref > 0.0 ? 1.0 / ref : 0.0;
  out.residual = (out.t * h_f - h_f0).norm() * scale;
  out.unfocused_residual = (h_f - h_f0).norm() * scale;
  return out;
}

template <typename T>
void put(std::ofstream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
T take(std::ifstream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!in) throw IoError("focusing cache: truncated file");
  return v;
}

}  // namespace

FocusingMatrix focusing_matrix(const SteeringMatrix& h_f, const SteeringMatrix& h_f0, double rcond) {
  if (h_f.entries.rows() != h_f0.entries.rows() || h_f.entries.cols() != h_f0.entries.cols())
    throw ConfigError("focusing: steering matrices have different shapes");
  return finish(h_f.entries, h_f0.entries, pseudo_inverse(h_f.entries, rcond));
}

std::uint64_t array_hash(const ArrayGeometry& array, double c) {
  Hasher h;
  h.str(to_string(array.model)).f64(array.radius).i64(array.sh_order).f64(c);
  for (const auto& p : array.mic_positions) h.f64(p.x()).f64(p.y()).f64(p.z());
  return h.digest();
}

std::uint64_t band_plan_hash(const BandPlan& plan, double rcond) {
  Hasher h;
  h.f64(plan.fft_delta_f).f64(rcond);
  for (const auto& b : plan.bands) {
    h.f64(b.start).f64(b.center).i64(static_cast<std::int64_t>(b.bins.size()));
    for (int bin : b.bins) h.i64(bin);
  }
  return h.digest();
}

std::uint64_t grid_hash(const DirectionGrid& grid) {
  Hasher h;
  h.str(grid.scheme);
  for (const auto& d : grid.directions) h.f64(d.elevation).f64(d.azimuth);
  return h.digest();
}

FocusingOperator build_focusing_operator(const ArrayGeometry& array, const BandPlan& plan,
                                         const DirectionGrid& grid, double rcond, double c) {
  FocusingOperator op;
  op.array_hash = array_hash(array, c);
  op.plan_hash = band_plan_hash(plan, rcond);
  op.grid_hash = grid_hash(grid);
  op.q = static_cast<int>(array.size());

  // Bands overlap, so pseudo-inverses are shared per FFT bin.
  std::map<int, std::pair<Eigen::MatrixXcd, Pinv>> per_bin;
  for (const auto& band : plan.bands)
    for (std::size_t j = 0; j < band.size(); ++j) {
      const int bin = band.bins[j];
      if (per_bin.count(bin)) continue;
      auto h = steering_matrix(array, band.frequency(j), grid, c).entries;
      auto p = pseudo_inverse(h, rcond);
      per_bin.emplace(bin, std::make_pair(std::move(h), std::move(p)));
    }

  for (const auto& band : plan.bands) {
    const Eigen::MatrixXcd h0 = steering_matrix(array, band.center, grid, c).entries;
    std::vector<Eigen::MatrixXcd> ts;
    std::vector<double> res, unf;
    for (int bin : band.bins) {
      const auto& [h, p] = per_bin.at(bin);
      auto fm = finish(h, h0, p);
      ts.push_back(std::move(fm.t));
      res.push_back(fm.residual);
      unf.push_back(fm.unfocused_residual);
    }
    op.t.push_back(std::move(ts));
    op.residual.push_back(std::move(res));
    op.unfocused_residual.push_back(std::move(unf));
  }
  return op;
}

void save_focusing_operator(const std::string& path, const FocusingOperator& op) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path);
  out.write(kMagic, sizeof kMagic);
  put<std::uint64_t>(out, op.array_hash);
  put<std::uint64_t>(out, op.plan_hash);
  put<std::uint64_t>(out, op.grid_hash);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(op.q));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(op.t.size()));
  for (std::size_t b = 0; b < op.t.size(); ++b) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(op.t[b].size()));
    for (std::size_t j = 0; j < op.t[b].size(); ++j) {
      put<double>(out, op.residual[b][j]);
      put<double>(out, op.unfocused_residual[b][j]);
      out.write(reinterpret_cast<const char*>(op.t[b][j].data()),
                static_cast<std::streamsize>(sizeof(cplx) * static_cast<std::size_t>(op.t[b][j].size())));
    }
  }
  if (!out) throw IoError("write failed for " + path);
}

FocusingOperator load_focusing_operator(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  char magic[sizeof kMagic];
  in.read(magic, sizeof magic);
  if (!in || !std::equal(magic, magic + sizeof magic, kMagic)) throw IoError(path + ": not a focusing cache");
  FocusingOperator op;
  op.array_hash = take<std::uint64_t>(in);
  op.plan_hash = take<std::uint64_t>(in);
  op.grid_hash = take<std::uint64_t>(in);
  op.q = static_cast<int>(take<std::uint32_t>(in));
  const auto bands = take<std::uint32_t>(in);
  for (std::uint32_t b = 0; b < bands; ++b) {
    const auto n = take<std::uint32_t>(in);
    std::vector<Eigen::MatrixXcd> ts(n, Eigen::MatrixXcd(op.q, op.q));
    std::vector<double> res(n), unf(n);
    for (std::uint32_t j = 0; j < n; ++j) {
      res[j] = take<double>(in);
      unf[j] = take<double>(in);
      in.read(reinterpret_cast<char*>(ts[j].data()),
              static_cast<std::streamsize>(sizeof(cplx) * static_cast<std::size_t>(ts[j].size())));
      if (!in) throw IoError(path + ": truncated operator");
    }
    op.t.push_back(std::move(ts));
    op.residual.push_back(std::move(res));
    op.unfocused_residual.push_back(std::move(unf));
  }
  return op;
}

FocusingOperator cached_focusing_operator(const std::string& dir, const ArrayGeometry& array,
                                          const BandPlan& plan, const DirectionGrid& grid, double rcond,
                                          double c) {
  if (dir.empty()) return build_focusing_operator(array, plan, grid, rcond, c);
  const auto ah = array_hash(array, c);
  const auto ph = band_plan_hash(plan, rcond);
  const auto gh = grid_hash(grid);
  const auto key = Hasher().i64(static_cast<std::int64_t>(ah)).i64(static_cast<std::int64_t>(ph)).i64(static_cast<std::int64_t>(gh)).digest();
  const auto path = (std::filesystem::path(dir) / ("focus-" + hex64(key) + ".bin")).string();

  static std::mutex mu;
  std::lock_guard lock(mu);
  if (std::filesystem::exists(path)) {
    try {
      auto op = load_focusing_operator(path);
      if (op.array_hash == ah && op.plan_hash == ph && op.grid_hash == gh && op.q == static_cast<int>(array.size()) &&
          op.band_count() == plan.bands.size())
        return op;
    } catch (const IoError&) {
    }
  }
  auto op = build_focusing_operator(array, plan, grid, rcond, c);
  std::filesystem::create_directories(dir);
  const auto tmp = path + ".tmp";
  save_focusing_operator(tmp, op);
  std::filesystem::rename(tmp, path);
  return op;
}

std::vector<Eigen::MatrixXcd> apply_focusing(const std::vector<Eigen::MatrixXcd>& t,
                                             const std::vector<Eigen::MatrixXcd>& frames) {
  if (t.size() != frames.size()) throw ConfigError("focusing: operator and band sizes differ");
  std::vector<Eigen::MatrixXcd> out;
  out.reserve(frames.size());
  for (std::size_t j = 0; j < frames.size(); ++j) out.push_back(t[j] * frames[j]);
  return out;
}

Eigen::MatrixXcd focus_scm(const Eigen::MatrixXcd& t, const Eigen::MatrixXcd& r) { return t * r * t.adjoint(); }

}  // namespace phalcor
