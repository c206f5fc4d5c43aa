#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "phalcor/array_model.hpp"
#include "phalcor/stft_scm.hpp"

namespace phalcor {

struct DelayGrid {
  double min = 0.25e-3;
  double max = 20e-3;
  double step = 0.1e-3;

  std::vector<double> values() const;
};

struct DetectorConfig {
  double rho_min = 0.9;
  double omega_th_deg = 10.0;
  double eps_u = 0.63;
  int s_max = 3;
  DelayGrid delays;
  std::optional<Direction> direct_doa;  // estimated from the data when empty

  // Candidates of one (band, group) within dedup_angle and dedup_tau of a
  // stronger one are dropped; side-lobe suppression widens dedup_tau to the
  // whole delay range.
  double dedup_tau = 0.3e-3;
  double dedup_angle_deg = 15.0;
  bool sidelobe_suppression = true;
  // OMP atoms within omega_th of the direct sound are the direct self-term.
  bool reject_direct_atoms = true;
  // Drops delays whose OMP residual stays above eps_u after s_max atoms.
  bool require_omp_fit = false;

  void validate() const;
};

/// Steering atoms of one band center, with their norms and l2-normalized copies.
struct SteeringDictionary {
  double frequency = 0.0;
  DirectionGrid grid;
  Eigen::Matrix3Xd units;
  Eigen::MatrixXcd atoms;       // Q x G
  Eigen::VectorXd norms;        // G
  Eigen::MatrixXcd normalized;  // Q x G

  std::size_t size() const { return grid.size(); }
};

SteeringDictionary make_dictionary(const ArrayGeometry& array, double frequency, const DirectionGrid& grid,
                                   double c = kSpeedOfSound);

/// w_j proportional to 1 / tr R(f_j), summing to one; zero-trace bins get 0.
/// Returns all zeros when every trace vanishes.
std::vector<double> alignment_weights(std::span<const Eigen::MatrixXcd> r);

struct PhaseAligned {
  double tau = 0.0;
  Eigen::MatrixXcd m;
  bool degenerate = false;  // every trace was zero
};

/// sum_j w_j R(f_j) exp(i 2 pi tau offset_j), offsets in Hz from the band start.
PhaseAligned phase_align(std::span<const Eigen::MatrixXcd> r, std::span<const double> offsets, double tau);

/// phase_align() over many delays with one real matrix product. Requires
/// Hermitian R(f_j).
std::vector<Eigen::MatrixXcd> phase_align_batch(std::span<const Eigen::MatrixXcd> r,
                                                std::span<const double> offsets, std::span<const double> taus);

struct Rank1 {
  double sigma = 0.0;
  Eigen::VectorXcd u;
  Eigen::VectorXcd v;
};

/// Leading singular triple, m ~ sigma u v^H.
Rank1 rank1_approx(const Eigen::MatrixXcd& m);

struct DirectMatch {
  double rho = 0.0;
  std::size_t index = 0;
  Direction doa;
};

/// rho = max_g |h_g^H v| / ||h_g||, smallest index on ties.
DirectMatch direct_sound_match(const Eigen::VectorXcd& v, const SteeringDictionary& dict);

struct OmpAtom {
  std::size_t index = 0;
  Direction doa;
  cplx coefficient;  // against the unnormalized atom
};

struct OmpResult {
  std::vector<OmpAtom> atoms;
  std::vector<double> residual_norms;  // after each re-fit
};

OmpResult omp_doa(const Eigen::VectorXcd& u, const SteeringDictionary& dict, double eps_u, int s_max);

struct DetectionCandidate {
  double tau = 0.0;
  Direction doa;
  std::size_t grid_index = 0;
  int tau_index = 0;
  double coeff_mag = 0.0;
  double rho = 0.0;
  double sigma = 0.0;
  int band = 0;
  int group = 0;
};

/// Per (band, group, delay) outcome of the scan, before the direct-sound gate.
struct ScanCell {
  int band = 0;
  int group = 0;
  int tau_index = 0;
  double sigma = 0.0;
  double rho = 0.0;
  std::size_t direct_index = 0;
  Eigen::VectorXcd u;  // kept only when rho >= rho_min
};

struct DelayScan {
  std::vector<double> taus;
  std::vector<ScanCell> cells;
  std::vector<Eigen::MatrixXcd> band_power;  // per band, sum over groups of the weighted mean SCM
};

/// Scans the delay grid of one band using the dictionary of its center
/// frequency. Holds the phase kernel of the band.
class BandScanner {
 public:
  BandScanner(const Band& band, const SteeringDictionary& dict, const DetectorConfig& cfg);
  void scan(const ScmStack& stack, DelayScan& out) const;

 private:
  const SteeringDictionary* dict_;
  DetectorConfig cfg_;
  std::vector<double> taus_;
  std::vector<double> offsets_;
  Eigen::MatrixXd kernel_;  // J x 2T, [cos | sin]
};

/// Medoid of the matched directions of the top-decile rho cells (rho >= rho_min),
/// falling back to the beamformer-power maximum.
Direction estimate_direct_doa(const DelayScan& scan, const std::vector<SteeringDictionary>& dicts,
                              const DetectorConfig& cfg);

/// Applies the rho and direct-direction gates and runs OMP on the kept cells.
std::vector<DetectionCandidate> extract_candidates(const DelayScan& scan,
                                                   const std::vector<SteeringDictionary>& dicts,
                                                   const DetectorConfig& cfg, const Direction& direct);

std::vector<DetectionCandidate> suppress_duplicates(std::vector<DetectionCandidate> candidates,
                                                    const DetectorConfig& cfg);

struct Detections {
  Direction direct;
  std::vector<DetectionCandidate> raw;
  std::vector<DetectionCandidate> candidates;  // after suppression
  std::size_t observations = 0;                // (band, group) cells scanned
};

/// Full detection over precomputed stacks; dicts and plan are indexed by band.
Detections detect_candidates(const std::vector<ScmStack>& stacks, const BandPlan& plan,
                             const std::vector<SteeringDictionary>& dicts, const DetectorConfig& cfg);

void write_candidates_csv(const std::string& path, const std::vector<DetectionCandidate>& candidates);
std::vector<DetectionCandidate> read_candidates_csv(const std::string& path);

}  // namespace phalcor
