#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "phalcor/array_model.hpp"
#include "phalcor/stft_scm.hpp"

namespace phalcor {

struct FocusingMatrix {
  Eigen::MatrixXcd t;                // Q x Q
  double residual = 0.0;             // ||T H(f) - H(f0)||_F / ||H(f0)||_F
  double unfocused_residual = 0.0;   // ||H(f) - H(f0)||_F / ||H(f0)||_F
  bool truncated = false;            // singular values fell below the cutoff
};

/// T = H(f0) pinv(H(f)); the pseudo-inverse drops singular values below
/// rcond * sigma_max.
FocusingMatrix focusing_matrix(const SteeringMatrix& h_f, const SteeringMatrix& h_f0, double rcond = 1e-6);

struct FocusingOperator {
  std::uint64_t array_hash = 0;
  std::uint64_t plan_hash = 0;
  std::uint64_t grid_hash = 0;
  int q = 0;
  std::vector<std::vector<Eigen::MatrixXcd>> t;  // [band][bin]
  std::vector<std::vector<double>> residual;
  std::vector<std::vector<double>> unfocused_residual;

  std::size_t band_count() const { return t.size(); }
};

std::uint64_t array_hash(const ArrayGeometry& array, double c);
std::uint64_t band_plan_hash(const BandPlan& plan, double rcond);
std::uint64_t grid_hash(const DirectionGrid& grid);

FocusingOperator build_focusing_operator(const ArrayGeometry& array, const BandPlan& plan,
                                         const DirectionGrid& grid, double rcond = 1e-6,
                                         double c = kSpeedOfSound);

void save_focusing_operator(const std::string& path, const FocusingOperator& op);
FocusingOperator load_focusing_operator(const std::string& path);

/// Loads `<dir>/focus-<hash>.bin` when its header matches, else builds and
/// writes it. An empty dir disables caching.
FocusingOperator cached_focusing_operator(const std::string& dir, const ArrayGeometry& array,
                                          const BandPlan& plan, const DirectionGrid& grid,
                                          double rcond = 1e-6, double c = kSpeedOfSound);

/// p~ = T p for every frame of every bin in a band.
std::vector<Eigen::MatrixXcd> apply_focusing(const std::vector<Eigen::MatrixXcd>& t,
                                             const std::vector<Eigen::MatrixXcd>& band_frames);

/// T R T^H
Eigen::MatrixXcd focus_scm(const Eigen::MatrixXcd& t, const Eigen::MatrixXcd& r);

}  // namespace phalcor
