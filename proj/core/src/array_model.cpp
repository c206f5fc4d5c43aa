#include "phalcor/array_model.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <sstream>

#include <Eigen/Geometry>

#include <json.hpp>

#include "phalcor/error.hpp"

namespace phalcor {

namespace {

constexpr cplx kI{0.0, 1.0};

// Below this argument the radial terms use their leading-order expansion.
constexpr double kSmallKr = 1e-3;

// em32 capsule (polar, azimuth) angles in degrees.
constexpr std::array<std::array<double, 2>, 32> kEm32Angles{{
    {69, 0},    {90, 32},   {111, 0},   {90, 328},  {32, 0},    {55, 45},   {90, 69},
    {125, 45},  {148, 0},   {125, 315}, {90, 291},  {55, 315},  {21, 91},   {58, 90},
    {121, 90},  {159, 89},  {69, 180},  {90, 212},  {111, 180}, {90, 148},  {32, 180},
    {55, 225},  {90, 249},  {125, 225}, {148, 180}, {125, 135}, {90, 111},  {55, 135},
    {21, 269},  {58, 270},  {122, 270}, {159, 271},
}};

double double_factorial_odd(int n) {
  // (2n-1)!! with (-1)!! = 1
  double r = 1.0;
  for (int k = 2 * n - 1; k > 1; k -= 2) r *= k;
  return r;
}

// Legendre polynomials P_0..P_order at x.
void legendre(int order, double x, double* out) {
  out[0] = 1.0;
  if (order >= 1) out[1] = x;
  for (int n = 1; n < order; ++n)
    out[n + 1] = ((2.0 * n + 1.0) * x * out[n] - n * out[n - 1]) / (n + 1.0);
}

cplx ipow(int n) {
  switch (n % 4) {
    case 0: return {1, 0};
    case 1: return {0, 1};
    case 2: return {-1, 0};
    default: return {0, -1};
  }
}

Eigen::VectorXcd rigid_column(const ArrayGeometry& array, const std::vector<cplx>& modal,
                              const Eigen::Vector3d& u, std::vector<double>& pn) {
  const auto q_count = static_cast<Eigen::Index>(array.size());
  Eigen::VectorXcd h(q_count);
  for (Eigen::Index q = 0; q < q_count; ++q) {
    const Eigen::Vector3d& r = array.mic_positions[static_cast<std::size_t>(q)];
    const double x = std::clamp(u.dot(r) / array.radius, -1.0, 1.0);
    legendre(array.sh_order, x, pn.data());
    cplx acc{0.0, 0.0};
    for (int n = 0; n <= array.sh_order; ++n) acc += modal[static_cast<std::size_t>(n)] * pn[static_cast<std::size_t>(n)];
    h(q) = acc;
  }
  return h;
}

Eigen::VectorXcd open_column(const ArrayGeometry& array, double k, const Eigen::Vector3d& u) {
  const auto q_count = static_cast<Eigen::Index>(array.size());
  Eigen::VectorXcd h(q_count);
  for (Eigen::Index q = 0; q < q_count; ++q) {
    const double phase = k * u.dot(array.mic_positions[static_cast<std::size_t>(q)]);
    h(q) = std::polar(1.0, phase);
  }
  return h;
}

}  // namespace

double wrap_azimuth(double azimuth) {
  double a = std::remainder(azimuth, 2.0 * kPi);  // [-pi, pi]
  if (a <= -kPi) a += 2.0 * kPi;
  return a;
}

Direction Direction::from_vector(const Eigen::Vector3d& v) {
  const double n = v.norm();
  if (n == 0.0) return {};
  const double z = std::clamp(v.z() / n, -1.0, 1.0);
  double az = std::atan2(v.y(), v.x());
  if (az <= -kPi) az = kPi;
  return {std::acos(z), az};
}

Eigen::Vector3d Direction::unit_vector() const {
  const double s = std::sin(elevation);
  return {s * std::cos(azimuth), s * std::sin(azimuth), std::cos(elevation)};
}

double angular_distance(const Direction& a, const Direction& b) {
  const Eigen::Vector3d u = a.unit_vector();
  const Eigen::Vector3d v = b.unit_vector();
  return std::atan2(u.cross(v).norm(), u.dot(v));
}

double azimuth_distance(const Direction& a, const Direction& b) {
  return std::abs(wrap_azimuth(a.azimuth - b.azimuth));
}

std::string_view to_string(ArrayModel model) {
  return model == ArrayModel::RigidSphere ? "rigid-sphere" : "open";
}

ArrayModel array_model_from_string(std::string_view name) {
  if (name == "rigid-sphere" || name == "rigid") return ArrayModel::RigidSphere;
  if (name == "open") return ArrayModel::Open;
  throw ConfigError("unknown array model '" + std::string(name) + "'");
}

void ArrayGeometry::validate() const {
  if (mic_positions.empty()) throw ConfigError("array '" + label + "' has no microphones");
  if (sh_order < 0) throw ConfigError("array sh_order must be nonnegative");
  if (model == ArrayModel::RigidSphere) {
    if (!(radius > 0.0)) throw ConfigError("rigid-sphere array requires a positive radius");
    for (const auto& p : mic_positions) {
      if (std::abs(p.norm() - radius) > 1e-9)
        throw ConfigError("rigid-sphere microphone is not on the sphere surface");
    }
  }
}

ArrayGeometry em32_like() {
  ArrayGeometry a;
  a.label = "em32-like";
  a.model = ArrayModel::RigidSphere;
  a.radius = 0.042;
  a.sh_order = 8;
  for (const auto& [theta, phi] : kEm32Angles) {
    const Direction d{deg2rad(theta), wrap_azimuth(deg2rad(phi))};
    a.mic_positions.push_back(a.radius * d.unit_vector());
  }
  return a;
}

ArrayGeometry semicircular6(double radius) {
  ArrayGeometry a;
  a.label = "semicircular-6";
  a.model = ArrayModel::Open;
  a.radius = radius;
  a.sh_order = 8;
  for (int q = 0; q < 6; ++q) {
    const Direction d{kPi / 2, kPi * q / 5.0};
    a.mic_positions.push_back(radius * d.unit_vector());
  }
  return a;
}

ArrayGeometry array_preset(std::string_view name) {
  if (name == "em32-like" || name == "em32") return em32_like();
  if (name == "semicircular-6" || name == "semicircular" || name == "semi") return semicircular6();
  throw ConfigError("unknown array preset '" + std::string(name) + "'");
}

Eigen::Matrix3Xd DirectionGrid::unit_vectors() const {
  Eigen::Matrix3Xd u(3, static_cast<Eigen::Index>(directions.size()));
  for (std::size_t g = 0; g < directions.size(); ++g)
    u.col(static_cast<Eigen::Index>(g)) = directions[g].unit_vector();
  return u;
}

std::size_t DirectionGrid::nearest(const Direction& d) const {
  const Eigen::Vector3d u = d.unit_vector();
  std::size_t best = 0;
  double best_dot = -2.0;
  for (std::size_t g = 0; g < directions.size(); ++g) {
    const double dot = directions[g].unit_vector().dot(u);
    if (dot > best_dot) {
      best_dot = dot;
      best = g;
    }
  }
  return best;
}

DirectionGrid make_direction_grid(std::size_t n, std::string_view scheme) {
  if (n < 1) throw ConfigError("direction grid needs at least one point");
  if (scheme != "fibonacci" && scheme != "near-uniform")
    throw ConfigError("unsupported grid scheme '" + std::string(scheme) + "'");
  const double golden = kPi * (3.0 - std::sqrt(5.0));
  DirectionGrid grid;
  grid.scheme = "fibonacci";
  grid.directions.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double z = 1.0 - (2.0 * static_cast<double>(i) + 1.0) / static_cast<double>(n);
    grid.directions.push_back({std::acos(z), wrap_azimuth(golden * static_cast<double>(i))});
  }
  return grid;
}

std::vector<cplx> rigid_sphere_modal_coefficients(int order, double kr) {
  std::vector<cplx> out(static_cast<std::size_t>(order) + 1);
  const double x = std::abs(kr);
  for (int n = 0; n <= order; ++n) {
    cplx b;
    if (x < kSmallKr) {
      // b_n ~ x^n / ((n+1) (2n-1)!!)
      b = std::pow(x, n) / ((n + 1.0) * double_factorial_odd(n));
    } else {
      const auto un = static_cast<unsigned>(n);
      const double jn = std::sph_bessel(un, x);
      const double yn = std::sph_neumann(un, x);
      double djn, dyn;
      if (n == 0) {
        djn = -std::sph_bessel(1u, x);
        dyn = -std::sph_neumann(1u, x);
      } else {
        djn = std::sph_bessel(un - 1, x) - (n + 1.0) / x * jn;
        dyn = std::sph_neumann(un - 1, x) - (n + 1.0) / x * yn;
      }
      // Wronskian form of j_n - (j_n'/h_n') h_n on the sphere surface.
      const cplx dhn{djn, -dyn};
      b = -kI / (x * x * dhn);
    }
    out[static_cast<std::size_t>(n)] = (2.0 * n + 1.0) * ipow(n) * b;
  }
  return out;
}

Eigen::VectorXcd steering_vector_wavenumber(const ArrayGeometry& array, double k,
                                            const Direction& doa) {
  const Eigen::Vector3d u = doa.unit_vector();
  if (array.model == ArrayModel::Open) return open_column(array, k, u);
  const auto modal = rigid_sphere_modal_coefficients(array.sh_order, k * array.radius);
  std::vector<double> pn(static_cast<std::size_t>(array.sh_order) + 1);
  return rigid_column(array, modal, u, pn);
}

Eigen::VectorXcd steering_vector(const ArrayGeometry& array, double frequency,
                                 const Direction& doa, double c) {
  return steering_vector_wavenumber(array, 2.0 * kPi * frequency / c, doa);
}

SteeringMatrix steering_matrix(const ArrayGeometry& array, double frequency,
                               const DirectionGrid& grid, double c) {
  SteeringMatrix h;
  h.frequency = frequency;
  h.entries.resize(static_cast<Eigen::Index>(array.size()), static_cast<Eigen::Index>(grid.size()));
  const double k = 2.0 * kPi * frequency / c;
  if (array.model == ArrayModel::Open) {
    for (std::size_t g = 0; g < grid.size(); ++g)
      h.entries.col(static_cast<Eigen::Index>(g)) = open_column(array, k, grid[g].unit_vector());
    return h;
  }
  const auto modal = rigid_sphere_modal_coefficients(array.sh_order, k * array.radius);
  std::vector<double> pn(static_cast<std::size_t>(array.sh_order) + 1);
  for (std::size_t g = 0; g < grid.size(); ++g)
    h.entries.col(static_cast<Eigen::Index>(g)) = rigid_column(array, modal, grid[g].unit_vector(), pn);
  return h;
}

ArrayGeometry parse_array_descriptor(const std::string& json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("array descriptor: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("array descriptor must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (key != "preset" && key != "model" && key != "radius" && key != "sh_order" &&
        key != "positions" && key != "label")
      throw ConfigError("array." + key + ": unknown key");
  }
  ArrayGeometry a;
  if (j.contains("preset")) {
    a = array_preset(j.at("preset").get<std::string>());
    if (j.contains("radius") && a.model == ArrayModel::Open) {
      const double r = j.at("radius").get<double>();
      if (a.label == "semicircular-6") a = semicircular6(r);
    }
    if (j.contains("sh_order")) a.sh_order = j.at("sh_order").get<int>();
  } else {
    try {
      a.label = j.value("label", std::string("custom"));
      a.model = array_model_from_string(j.at("model").get<std::string>());
      a.radius = j.value("radius", 0.0);
      a.sh_order = j.value("sh_order", 8);
      for (const auto& p : j.at("positions")) {
        if (!p.is_array() || p.size() != 3) throw ConfigError("array.positions: expected [x, y, z]");
        a.mic_positions.emplace_back(p[0].get<double>(), p[1].get<double>(), p[2].get<double>());
      }
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(std::string("array descriptor: ") + e.what());
    }
  }
  a.validate();
  return a;
}

ArrayGeometry load_array_descriptor(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open array descriptor '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_array_descriptor(ss.str());
}

std::string array_descriptor_json(const ArrayGeometry& array) {
  nlohmann::json j;
  j["label"] = array.label;
  j["model"] = std::string(to_string(array.model));
  j["radius"] = array.radius;
  j["sh_order"] = array.sh_order;
  auto& pos = j["positions"] = nlohmann::json::array();
  for (const auto& p : array.mic_positions) pos.push_back({p.x(), p.y(), p.z()});
  return j.dump(2);
}

}  // namespace phalcor
