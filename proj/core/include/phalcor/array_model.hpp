#pragma once

#include <complex>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace phalcor {

using cplx = std::complex<double>;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kSpeedOfSound = 343.0;

inline constexpr double deg2rad(double deg) { return deg * kPi / 180.0; }
inline constexpr double rad2deg(double rad) { return rad * 180.0 / kPi; }

/// Maps any angle onto (-pi, pi].
double wrap_azimuth(double azimuth);

/// A direction on the unit sphere. Elevation is the polar angle measured from
/// +z in [0, pi]; azimuth is measured counter-clockwise from +x in (-pi, pi].
struct Direction {
  double elevation = kPi / 2;
  double azimuth = 0.0;

  static Direction from_vector(const Eigen::Vector3d& v);
  Eigen::Vector3d unit_vector() const;

  /// The direction mirrored through the horizontal plane.
  Direction mirrored() const { return {kPi - elevation, azimuth}; }

  bool operator==(const Direction&) const = default;
};

/// Great-circle angle in [0, pi].
double angular_distance(const Direction& a, const Direction& b);

/// |azimuth difference| wrapped to [0, pi]; elevation is ignored.
double azimuth_distance(const Direction& a, const Direction& b);

enum class ArrayModel { Open, RigidSphere };

std::string_view to_string(ArrayModel model);
ArrayModel array_model_from_string(std::string_view name);

struct ArrayGeometry {
  std::string label;
  std::vector<Eigen::Vector3d> mic_positions;  // meters, relative to the array center
  ArrayModel model = ArrayModel::Open;
  double radius = 0.0;  // sphere radius; required for the rigid model
  int sh_order = 8;     // truncation order of the rigid-sphere series

  std::size_t size() const { return mic_positions.size(); }

  /// Throws ConfigError when Q == 0, sh_order < 0, or rigid mics are off the sphere.
  void validate() const;
};

/// 32 capsules on a 4.2 cm rigid sphere at the em32 capsule angles.
ArrayGeometry em32_like();

/// 6 capsules spanning azimuth [0, pi] on the equator of an open sphere.
ArrayGeometry semicircular6(double radius = 0.1);

/// "em32-like" or "semicircular-6".
ArrayGeometry array_preset(std::string_view name);

struct DirectionGrid {
  std::vector<Direction> directions;
  std::string scheme;

  std::size_t size() const { return directions.size(); }
  const Direction& operator[](std::size_t i) const { return directions[i]; }

  /// 3 x G matrix of unit vectors.
  Eigen::Matrix3Xd unit_vectors() const;

  /// Index of the grid direction closest to `d` (smallest index on ties).
  std::size_t nearest(const Direction& d) const;
};

/// Deterministic near-uniform grid. Supported schemes: "fibonacci" and its
/// alias "near-uniform" (spherical Fibonacci lattice).
DirectionGrid make_direction_grid(std::size_t n, std::string_view scheme = "fibonacci");

struct SteeringMatrix {
  double frequency = 0.0;
  Eigen::MatrixXcd entries;  // Q x G; column g is h(f, grid[g])
};

/// Modal coefficients (2n+1) i^n b_n(kr) of a rigid sphere observed on its
/// surface, n = 0..order. b_n = j_n - j_n'/h_n' h_n with h_n = j_n - i y_n.
std::vector<cplx> rigid_sphere_modal_coefficients(int order, double kr);

/// Far-field steering vector. A plane wave arriving from `doa` produces
/// exp(i k u.r_q) on an open array, with u pointing from the array toward the
/// source. The rigid model sums the spherical-harmonic series to sh_order.
Eigen::VectorXcd steering_vector(const ArrayGeometry& array, double frequency,
                                 const Direction& doa, double c = kSpeedOfSound);

/// Same as steering_vector() but parameterized by a signed wavenumber.
Eigen::VectorXcd steering_vector_wavenumber(const ArrayGeometry& array, double k,
                                            const Direction& doa);

SteeringMatrix steering_matrix(const ArrayGeometry& array, double frequency,
                               const DirectionGrid& grid, double c = kSpeedOfSound);

/// Array descriptor (JSON): either {"preset": "..."} or
/// {"model": "rigid-sphere"|"open", "radius": r, "sh_order": n, "positions": [[x,y,z],...]}.
ArrayGeometry load_array_descriptor(const std::string& path);
ArrayGeometry parse_array_descriptor(const std::string& json_text);
std::string array_descriptor_json(const ArrayGeometry& array);

}  // namespace phalcor
