#include "phalcor/stft_scm.hpp"

#include <cmath>

#include "fft.hpp"
#include "phalcor/error.hpp"

namespace phalcor {

std::vector<double> hann_window(int length) {
  std::vector<double> w(static_cast<std::size_t>(length));
  for (int n = 0; n < length; ++n) w[static_cast<std::size_t>(n)] = 0.5 * (1.0 - std::cos(2.0 * kPi * n / length));
  return w;
}

StftTensor stft(const MultichannelSignal& signal, const StftParams& params) {
  if (!(signal.fs > 0.0)) throw ConfigError("stft: sampling rate must be positive");
  if (!(params.window_seconds > 0.0) || !(params.overlap >= 0.0 && params.overlap < 1.0))
    throw ConfigError("stft: invalid window or overlap");
  StftTensor t;
  t.fs = signal.fs;
  t.window = static_cast<int>(std::lround(params.window_seconds * signal.fs));
  t.hop = std::max(1, static_cast<int>(std::lround(t.window * (1.0 - params.overlap))));
  t.fft_length = t.window;
  t.channels = signal.channels();
  if (signal.samples() < t.window)
    throw ConfigError("stft: signal has " + std::to_string(signal.samples()) + " samples, window needs " +
                      std::to_string(t.window));
  t.frames = 1 + (signal.samples() - t.window) / t.hop;

  detail::RealFft fft(static_cast<std::size_t>(t.fft_length));
  const auto nbins = static_cast<Eigen::Index>(fft.bins());
  t.bins.assign(static_cast<std::size_t>(nbins), Eigen::MatrixXcd::Zero(t.channels, t.frames));
  const auto w = hann_window(t.window);
  std::vector<double> frame(static_cast<std::size_t>(t.window));
  std::vector<cplx> spec(fft.bins());
  for (Eigen::Index m = 0; m < t.frames; ++m)
    for (Eigen::Index q = 0; q < t.channels; ++q) {
      const Eigen::Index start = m * t.hop;
      for (int n = 0; n < t.window; ++n)
        frame[static_cast<std::size_t>(n)] = signal.data(q, start + n) * w[static_cast<std::size_t>(n)];
      fft.forward(frame, spec);
      for (Eigen::Index b = 0; b < nbins; ++b) t.bins[static_cast<std::size_t>(b)](q, m) = spec[static_cast<std::size_t>(b)];
    }
  return t;
}

BandPlan band_plan(const BandPlanParams& p, double fft_delta_f) {
  if (!(fft_delta_f > 0.0)) throw ConfigError("bands: bin spacing must be positive");
  if (p.n_bands < 1) throw ConfigError("bands.n_bands must be >= 1");
  if (!(p.bandwidth > 0.0) || !(p.f_lo >= 0.0)) throw ConfigError("bands: invalid bandwidth or f_lo");
  if (p.bins_per_band < 0 || p.bins_per_band == 1) throw ConfigError("bands.bins_per_band must be 0 or >= 2");
  const double span = p.f_hi - p.f_lo - p.bandwidth;
  if (span < -1e-9) throw ConfigError("bands: f_lo + bandwidth exceeds f_hi");
  const double step = p.n_bands > 1 ? span / (p.n_bands - 1) : 0.0;
  const auto band_bins = static_cast<int>(std::lround(p.bandwidth / fft_delta_f));
  if (band_bins < 2) throw ConfigError("bands: bandwidth spans fewer than two FFT bins");

  BandPlan plan;
  plan.fft_delta_f = fft_delta_f;
  for (int b = 0; b < p.n_bands; ++b) {
    Band band;
    const auto j0 = static_cast<int>(std::lround((p.f_lo + b * step) / fft_delta_f));
    band.start = j0 * fft_delta_f;
    band.center = band.start + p.bandwidth / 2.0;
    if (p.bins_per_band == 0) {
      band.delta_f = fft_delta_f;
      for (int j = 0; j < band_bins; ++j) band.bins.push_back(j0 + j);
    } else {
      band.delta_f = p.bandwidth / p.bins_per_band;
      for (int j = 0; j < p.bins_per_band; ++j)
        band.bins.push_back(j0 + static_cast<int>(std::lround(j * band.delta_f / fft_delta_f)));
    }
    for (int bin : band.bins) band.offsets.push_back((bin - j0) * fft_delta_f);
    if (band.start + p.bandwidth > p.f_hi + fft_delta_f)
      throw ConfigError("bands: band " + std::to_string(b) + " exceeds f_hi");
    plan.bands.push_back(std::move(band));
  }
  return plan;
}

std::vector<FrameGroup> frame_groups(Eigen::Index frames, int frames_per_group, int advance) {
  if (frames_per_group < 1 || advance < 1) throw ConfigError("scm: group length and advance must be >= 1");
  std::vector<FrameGroup> groups;
  if (frames <= 0) return groups;
  if (frames < frames_per_group) {
    groups.push_back({0, frames, true});
    return groups;
  }
  for (Eigen::Index first = 0; first + frames_per_group <= frames; first += advance)
    groups.push_back({first, frames_per_group, false});
  return groups;
}

std::vector<Eigen::MatrixXcd> band_scms(const std::vector<Eigen::MatrixXcd>& frames, const FrameGroup& group) {
  std::vector<Eigen::MatrixXcd> r;
  r.reserve(frames.size());
  const double scale = 1.0 / static_cast<double>(group.count);
  for (const auto& z : frames) {
    const auto block = z.middleCols(group.first, group.count);
    Eigen::MatrixXcd m(z.rows(), z.rows());
    m.setZero();
    m.selfadjointView<Eigen::Lower>().rankUpdate(block, scale);
    m.triangularView<Eigen::StrictlyUpper>() = m.adjoint();
    r.push_back(std::move(m));
  }
  return r;
}

std::vector<Eigen::MatrixXcd> band_frames(const StftTensor& tensor, const Band& band) {
  std::vector<Eigen::MatrixXcd> out;
  out.reserve(band.bins.size());
  for (int bin : band.bins) {
    if (bin < 0 || bin >= tensor.bin_count()) throw ConfigError("bands: bin outside the STFT range");
    out.push_back(tensor.bins[static_cast<std::size_t>(bin)]);
  }
  return out;
}

std::vector<ScmStack> estimate_scm(const StftTensor& tensor, const BandPlan& plan, int frames_per_group,
                                   int advance) {
  std::vector<ScmStack> out;
  const auto groups = frame_groups(tensor.frames, frames_per_group, advance);
  for (std::size_t b = 0; b < plan.bands.size(); ++b) {
    const auto frames = band_frames(tensor, plan.bands[b]);
    for (std::size_t g = 0; g < groups.size(); ++g)
      out.push_back({static_cast<int>(b), static_cast<int>(g), band_scms(frames, groups[g])});
  }
  return out;
}

}  // namespace phalcor
