#include "phalcor/room_sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <numeric>
#include <tuple>

#include "fft.hpp"
#include "phalcor/error.hpp"
#include "phasors.hpp"

namespace phalcor {

RoomSpec RoomSpec::uniform(const Eigen::Vector3d& dims, double reflection_coeff, double c) {
  RoomSpec r;
  r.dims = dims;
  r.wall_coeffs.fill(reflection_coeff);
  r.c = c;
  return r;
}

bool RoomSpec::contains(const Eigen::Vector3d& p) const {
  return (p.array() > 0.0).all() && (p.array() < dims.array()).all();
}

double RoomSpec::wall_clearance(const Eigen::Vector3d& p) const {
  return std::min(p.minCoeff(), (dims - p).minCoeff());
}

void RoomSpec::validate() const {
  if (!(dims.array() > 0.0).all()) throw ConfigError("room dimensions must be positive");
  for (double b : wall_coeffs)
    if (!(b >= 0.0 && b < 1.0)) throw ConfigError("wall reflection coefficients must lie in [0, 1)");
  if (!(c > 0.0)) throw ConfigError("speed of sound must be positive");
}

const std::vector<RoomPreset>& reference_rooms() {
  static const std::vector<RoomPreset> rooms{
      {1, {12.0, 9.0, 5.0}, 1.22, 7.9},
      {2, {10.0, 7.0, 4.0}, 0.99, 12.0},
      {3, {9.0, 5.0, 3.0}, 0.89, 18.9},
      {4, {6.0, 4.0, 3.0}, 0.62, 25.6},
  };
  return rooms;
}

const RoomPreset& reference_room(int id) {
  for (const auto& r : reference_rooms())
    if (r.id == id) return r;
  throw ConfigError("unknown room preset " + std::to_string(id));
}

ReflectionSet ReflectionSet::truncated(double max_delay) const {
  ReflectionSet out;
  out.direct = direct;
  out.direct_distance = direct_distance;
  for (const auto& r : reflections)
    if (r.delay <= max_delay) out.reflections.push_back(r);
  return out;
}

std::vector<Reflection> ReflectionSet::all() const {
  std::vector<Reflection> v;
  v.reserve(reflections.size() + 1);
  v.push_back(direct);
  v.insert(v.end(), reflections.begin(), reflections.end());
  return v;
}

ReflectionSet image_sources(const RoomSpec& room, const Eigen::Vector3d& source,
                            const Eigen::Vector3d& receiver, double max_delay) {
  room.validate();
  if (!room.contains(source) || !room.contains(receiver))
    throw GeometryError("source and receiver must lie strictly inside the room");
  const double d0 = (source - receiver).norm();
  if (d0 < 1e-9) throw GeometryError("source and receiver coincide");

  const double d_max = d0 + room.c * max_delay;
  std::array<int, 3> n_max{};
  for (int a = 0; a < 3; ++a) n_max[a] = static_cast<int>(std::ceil(d_max / (2.0 * room.dims[a]))) + 1;

  ReflectionSet out;
  out.direct_distance = d0;
  out.direct.delay = 0.0;
  out.direct.amplitude = 1.0;
  out.direct.order = 0;
  out.direct.doa = Direction::from_vector(source - receiver);

  for (int nx = -n_max[0]; nx <= n_max[0]; ++nx)
    for (int ny = -n_max[1]; ny <= n_max[1]; ++ny)
      for (int nz = -n_max[2]; nz <= n_max[2]; ++nz)
        for (int px = 0; px <= 1; ++px)
          for (int py = 0; py <= 1; ++py)
            for (int pz = 0; pz <= 1; ++pz) {
              const std::array<int, 3> n{nx, ny, nz};
              const std::array<int, 3> p{px, py, pz};
              Eigen::Vector3d img;
              double gain = 1.0;
              int order = 0;
              for (int a = 0; a < 3; ++a) {
                img[a] = (1 - 2 * p[a]) * source[a] + 2.0 * n[a] * room.dims[a];
                const int low = std::abs(n[a] - p[a]);
                const int high = std::abs(n[a]);
                gain *= std::pow(room.wall_coeffs[2 * a], low) * std::pow(room.wall_coeffs[2 * a + 1], high);
                order += low + high;
              }
              if (order == 0) continue;
              const Eigen::Vector3d v = img - receiver;
              const double d = v.norm();
              const double delay = (d - d0) / room.c;
              if (delay > max_delay || gain == 0.0) continue;
              Reflection r;
              r.delay = std::max(delay, 0.0);
              r.amplitude = gain * d0 / d;
              r.doa = Direction::from_vector(v);
              r.order = order;
              out.reflections.push_back(r);
            }

  std::stable_sort(out.reflections.begin(), out.reflections.end(),
                   [](const Reflection& a, const Reflection& b) {
                     if (a.delay != b.delay) return a.delay < b.delay;
                     return a.order < b.order;
                   });
  return out;
}

double calibrate_reflection_coeff(const RoomSpec& room, double target_t60) {
  if (!(target_t60 > 0.0)) throw ConfigError("target T60 must be positive");
  const double absorption = 0.161 * room.volume() / (room.surface() * target_t60);
  if (absorption > 1.0)
    throw InfeasibleTargetError("T60 target requires mean absorption " + std::to_string(absorption) +
                                " > 1");
  const double r = std::sqrt(1.0 - absorption);
  return std::min(r, std::nextafter(1.0, 0.0));
}

double fit_reflection_coeff(const RoomSpec& room, double target_t60, double fs) {
  room.validate();
  double absorption = 1.0 - std::pow(calibrate_reflection_coeff(room, target_t60), 2);
  using Key = std::tuple<double, double, double, double, double, double>;
  static std::mutex mutex;
  static std::map<Key, double> cache;
  const Key key{room.dims.x(), room.dims.y(), room.dims.z(), room.c, target_t60, fs};
  {
    std::lock_guard lock(mutex);
    if (auto it = cache.find(key); it != cache.end()) return it->second;
  }
  const Eigen::Vector3d receiver = 0.5 * room.dims;
  const double d = std::min(1.2, 0.3 * room.dims.minCoeff());
  const Eigen::Vector3d source = receiver + d * Eigen::Vector3d::Ones().normalized();
  const double length = 1.2 * target_t60;
  double r = std::sqrt(1.0 - absorption);
  for (int iter = 0; iter < 20; ++iter) {
    const auto refs = image_sources(RoomSpec::uniform(room.dims, r, room.c), source, receiver, length);
    const double t60 = schroeder_t60(render_rir(refs, fs, length));
    if (std::abs(t60 / target_t60 - 1.0) < 0.01) break;
    // decay rate is close to proportional to absorption
    absorption *= t60 / target_t60;
    if (absorption >= 1.0)
      throw InfeasibleTargetError("T60 target unreachable: fitted absorption exceeds 1");
    r = std::sqrt(1.0 - absorption);
  }
  std::lock_guard lock(mutex);
  cache.emplace(key, r);
  return r;
}

std::string_view to_string(Calibration method) { return method == Calibration::Sabine ? "sabine" : "schroeder"; }

Calibration calibration_from_string(std::string_view name) {
  if (name == "sabine") return Calibration::Sabine;
  if (name == "schroeder") return Calibration::Schroeder;
  throw ConfigError("unknown calibration \"" + std::string(name) + "\" (expected sabine or schroeder)");
}

double reflection_coeff_for(const RoomSpec& room, double target_t60, Calibration method, double fs) {
  return method == Calibration::Sabine ? calibrate_reflection_coeff(room, target_t60)
                                       : fit_reflection_coeff(room, target_t60, fs);
}

double ImpulseResponse::energy() const {
  return std::inner_product(samples.begin(), samples.end(), samples.begin(), 0.0);
}

ImpulseResponse render_rir(const ReflectionSet& refs, double fs, double length) {
  if (!(fs > 0.0)) throw ConfigError("sampling rate must be positive");
  ImpulseResponse rir;
  rir.fs = fs;
  const auto n = static_cast<std::size_t>(std::llround(length * fs));
  rir.samples.assign(std::max<std::size_t>(n, 1), 0.0);
  for (const auto& r : refs.all()) {
    const auto idx = static_cast<std::size_t>(std::llround(r.delay * fs));
    if (idx >= rir.samples.size()) {
      rir.truncated = true;
      continue;
    }
    rir.samples[idx] += r.amplitude;
  }
  return rir;
}

std::vector<double> energy_decay_curve(const ImpulseResponse& rir) {
  const auto& h = rir.samples;
  std::vector<double> edc(h.size(), 0.0);
  double acc = 0.0;
  for (std::size_t i = h.size(); i-- > 0;) {
    acc += h[i] * h[i];
    edc[i] = acc;
  }
  if (acc <= 0.0) throw InsufficientDecayError("impulse response has no energy");
  const double total = edc.front();
  for (auto& e : edc)
    e = e > 0.0 ? 10.0 * std::log10(e / total) : -std::numeric_limits<double>::infinity();
  return edc;
}

double schroeder_t60(const ImpulseResponse& rir) {
  const auto edc = energy_decay_curve(rir);
  double st = 0, sy = 0, stt = 0, sty = 0;
  std::size_t count = 0;
  bool reached_end = false;
  for (std::size_t i = 0; i < edc.size(); ++i) {
    if (edc[i] < -25.0) {
      reached_end = true;
      break;
    }
    if (edc[i] <= -5.0) {
      const double t = static_cast<double>(i) / rir.fs;
      st += t;
      sy += edc[i];
      stt += t * t;
      sty += t * edc[i];
      ++count;
    }
  }
  if (!reached_end || count < 2)
    throw InsufficientDecayError("energy decay does not span -5 to -25 dB");
  const double n = static_cast<double>(count);
  const double slope = (n * sty - st * sy) / (n * stt - st * st);
  if (!(slope < 0.0)) throw InsufficientDecayError("energy decay slope is not negative");
  return -60.0 / slope;
}

double drr(const ImpulseResponse& rir, double direct_window) {
  if (!(direct_window > 0.0)) throw ConfigError("direct window must be positive");
  const auto split = std::min<std::size_t>(
      std::max<long long>(1, std::llround(direct_window * rir.fs)), rir.samples.size());
  double direct = 0.0, reverb = 0.0;
  for (std::size_t i = 0; i < rir.samples.size(); ++i)
    (i < split ? direct : reverb) += rir.samples[i] * rir.samples[i];
  if (reverb <= 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(direct / reverb);
}

namespace {

// Frequencies are processed in blocks to bound the size of the phasor matrices.
constexpr std::size_t kFreqBlock = 256;

void add_noise(Eigen::MatrixXcd& p, std::span<const cplx> source_spectrum, double noise_level,
               std::uint64_t seed) {
  if (noise_level <= 0.0 || source_spectrum.empty()) return;
  double power = 0.0;
  for (const auto& s : source_spectrum) power += std::norm(s);
  power /= static_cast<double>(source_spectrum.size());
  const double sigma = noise_level * std::sqrt(power) / std::sqrt(2.0);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (Eigen::Index f = 0; f < p.cols(); ++f)
    for (Eigen::Index q = 0; q < p.rows(); ++q) {
      const double re = normal(rng);
      const double im = normal(rng);
      p(q, f) += sigma * cplx(re, im);
    }
}

}  // namespace

Eigen::MatrixXcd simulate_array_pressure(const ArrayGeometry& array, const ReflectionSet& refs,
                                         std::span<const double> frequencies,
                                         std::span<const cplx> source_spectrum,
                                         double noise_level, std::uint64_t seed, double c) {
  if (frequencies.size() != source_spectrum.size())
    throw ConfigError("frequency and source spectrum lengths differ");
  const auto q_count = static_cast<Eigen::Index>(array.size());
  const auto f_count = static_cast<Eigen::Index>(frequencies.size());
  const auto all = refs.all();
  const auto k_count = static_cast<Eigen::Index>(all.size());
  Eigen::MatrixXcd p = Eigen::MatrixXcd::Zero(q_count, f_count);

  if (array.model == ArrayModel::Open) {
    // Each microphone sees every arrival as a pure delay tau_k - u_k.r_q / c.
    for (Eigen::Index q = 0; q < q_count; ++q) {
      Eigen::VectorXd taus(k_count), amps(k_count);
      for (Eigen::Index k = 0; k < k_count; ++k) {
        const auto& r = all[static_cast<std::size_t>(k)];
        taus(k) = r.delay - r.doa.unit_vector().dot(array.mic_positions[static_cast<std::size_t>(q)]) / c;
        amps(k) = r.amplitude;
      }
      for (std::size_t f0 = 0; f0 < frequencies.size(); f0 += kFreqBlock) {
        const std::size_t nf = std::min(kFreqBlock, frequencies.size() - f0);
        const Eigen::MatrixXcd e = detail::delay_phasors(taus, frequencies.subspan(f0, nf), -1.0);
        const Eigen::RowVectorXcd row = amps.transpose().cast<cplx>() * e;
        for (std::size_t j = 0; j < nf; ++j)
          p(q, static_cast<Eigen::Index>(f0 + j)) = row(static_cast<Eigen::Index>(j)) * source_spectrum[f0 + j];
      }
    }
  } else {
    // h_q(f, u) = sum_n c_n(kr) P_n(u.r_q): the image sum factorizes into a
    // real (Q*(N+1)) x K Legendre table times K x F delay phasors.
    const int order = array.sh_order;
    const Eigen::Index rows = q_count * (order + 1);
    Eigen::MatrixXd table(rows, k_count);
    std::vector<double> pn(static_cast<std::size_t>(order) + 1);
    Eigen::VectorXd taus(k_count);
    for (Eigen::Index k = 0; k < k_count; ++k) {
      const auto& r = all[static_cast<std::size_t>(k)];
      taus(k) = r.delay;
      const Eigen::Vector3d u = r.doa.unit_vector();
      for (Eigen::Index q = 0; q < q_count; ++q) {
        const double x = std::clamp(u.dot(array.mic_positions[static_cast<std::size_t>(q)]) / array.radius, -1.0, 1.0);
        pn[0] = 1.0;
        if (order >= 1) pn[1] = x;
        for (int n = 1; n < order; ++n) pn[n + 1] = ((2.0 * n + 1.0) * x * pn[n] - n * pn[n - 1]) / (n + 1.0);
        for (int n = 0; n <= order; ++n) table(q * (order + 1) + n, k) = r.amplitude * pn[static_cast<std::size_t>(n)];
      }
    }
    for (std::size_t f0 = 0; f0 < frequencies.size(); f0 += kFreqBlock) {
      const std::size_t nf = std::min(kFreqBlock, frequencies.size() - f0);
      const Eigen::MatrixXcd e = detail::delay_phasors(taus, frequencies.subspan(f0, nf), -1.0);
      const Eigen::MatrixXd yr = table * e.real();
      const Eigen::MatrixXd yi = table * e.imag();
      for (std::size_t j = 0; j < nf; ++j) {
        const double f = frequencies[f0 + j];
        const auto modal = rigid_sphere_modal_coefficients(order, 2.0 * kPi * f / c * array.radius);
        const auto col = static_cast<Eigen::Index>(j);
        for (Eigen::Index q = 0; q < q_count; ++q) {
          cplx acc{0.0, 0.0};
          for (int n = 0; n <= order; ++n) {
            const Eigen::Index row = q * (order + 1) + n;
            acc += modal[static_cast<std::size_t>(n)] * cplx(yr(row, col), yi(row, col));
          }
          p(q, static_cast<Eigen::Index>(f0 + j)) = acc * source_spectrum[f0 + j];
        }
      }
    }
  }
  add_noise(p, source_spectrum, noise_level, seed);
  return p;
}

Placement sample_placement(const RoomSpec& room, std::mt19937_64& rng, const PlacementRules& rules) {
  const Eigen::Vector3d lo = Eigen::Vector3d::Constant(rules.clearance);
  const Eigen::Vector3d hi = room.dims - lo;
  if ((hi.array() < lo.array()).any())
    throw GeometryError("room is too small for the requested wall clearance");
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> shift(-rules.perturbation, rules.perturbation);
  std::uniform_real_distribution<double> dist(rules.min_distance, rules.max_distance);
  std::normal_distribution<double> normal(0.0, 1.0);

  auto inside = [&](const Eigen::Vector3d& p) {
    return (p.array() >= lo.array()).all() && (p.array() <= hi.array()).all();
  };

  for (int attempt = 0; attempt < rules.max_attempts; ++attempt) {
    Eigen::Vector3d a;
    for (int i = 0; i < 3; ++i) a[i] = lo[i] + unit(rng) * (hi[i] - lo[i]);
    Eigen::Vector3d dir(normal(rng), normal(rng), normal(rng));
    if (dir.norm() < 1e-12) continue;
    dir.normalize();
    const Eigen::Vector3d s = a + dist(rng) * dir;
    if (!inside(s)) continue;
    for (int redraw = 0; redraw < rules.max_attempts; ++redraw) {
      const Eigen::Vector3d a2 = a + Eigen::Vector3d(shift(rng), shift(rng), shift(rng));
      const Eigen::Vector3d s2 = s + Eigen::Vector3d(shift(rng), shift(rng), shift(rng));
      if (inside(a2) && inside(s2) && (a2 - s2).norm() > 0.1) return {s2, a2};
    }
  }
  throw GeometryError("could not sample a placement satisfying the clearance rules");
}

SceneSignals synthesize_scene(const SceneConfig& scene) {
  scene.room.validate();
  SceneSignals out;
  out.reflections = image_sources(scene.room, scene.source_pos, scene.array_pos, scene.max_delay);
  out.mics = render_array_signal(scene, out.reflections);
  return out;
}

MultichannelSignal render_array_signal(const SceneConfig& scene, const ReflectionSet& refs) {
  scene.array.validate();
  const auto dry = load_source_signal(scene.source, scene.fs, scene.seed, scene.sim_max_freq);
  // Leading pad keeps sub-sample advances of the direct sound from wrapping.
  constexpr std::size_t kLead = 128;
  const auto tail = static_cast<std::size_t>(std::ceil(scene.max_delay * scene.fs)) + 512;
  std::size_t n = kLead + dry.size() + tail;
  n += n % 2;
  std::vector<double> padded(n, 0.0);
  std::copy(dry.begin(), dry.end(), padded.begin() + kLead);

  detail::RealFft fft(n);
  std::vector<cplx> spectrum(fft.bins());
  fft.forward(padded, spectrum);

  std::vector<double> freqs;
  std::vector<cplx> sub;
  for (std::size_t b = 0; b < fft.bins(); ++b) {
    const double f = static_cast<double>(b) * scene.fs / static_cast<double>(n);
    if (f > scene.sim_max_freq) break;
    freqs.push_back(f);
    sub.push_back(spectrum[b]);
  }
  const Eigen::MatrixXcd p = simulate_array_pressure(scene.array, refs, freqs, sub,
                                                     scene.noise_level, scene.seed ^ 0x5eedULL,
                                                     scene.room.c);

  MultichannelSignal out;
  out.fs = scene.fs;
  out.data.resize(p.rows(), static_cast<Eigen::Index>(n));
  std::vector<cplx> full(fft.bins());
  std::vector<double> time(n);
  for (Eigen::Index q = 0; q < p.rows(); ++q) {
    std::fill(full.begin(), full.end(), cplx{});
    for (Eigen::Index b = 0; b < p.cols(); ++b) full[static_cast<std::size_t>(b)] = p(q, b);
    fft.inverse(full, time);
    for (std::size_t i = 0; i < n; ++i) out.data(q, static_cast<Eigen::Index>(i)) = time[i] / static_cast<double>(n);
  }
  return out;
}

}  // namespace phalcor
