#pragma once

#include <vector>

#include <Eigen/Core>

#include "phalcor/array_model.hpp"
#include "phalcor/room_sim.hpp"

namespace phalcor {

struct StftParams {
  double window_seconds = 0.150;
  double overlap = 0.75;
};

/// One-sided STFT with a periodic Hann window and FFT length equal to the
/// window length. bins[b] holds the Q x frames matrix of bin b.
struct StftTensor {
  double fs = 16000.0;
  int window = 0;
  int hop = 0;
  int fft_length = 0;
  Eigen::Index frames = 0;
  Eigen::Index channels = 0;
  std::vector<Eigen::MatrixXcd> bins;

  double delta_f() const { return fs / fft_length; }
  Eigen::Index bin_count() const { return static_cast<Eigen::Index>(bins.size()); }
  cplx at(Eigen::Index frame, Eigen::Index bin, Eigen::Index channel) const {
    return bins[static_cast<std::size_t>(bin)](channel, frame);
  }
};

std::vector<double> hann_window(int length);

/// Throws ConfigError when the signal is shorter than one window.
StftTensor stft(const MultichannelSignal& signal, const StftParams& params = {});

struct BandPlanParams {
  double f_lo = 500.0;
  double f_hi = 5000.0;
  double bandwidth = 2000.0;
  int n_bands = 11;
  int bins_per_band = 0;  // 0 selects every FFT bin in the band
};

struct Band {
  double start = 0.0;      // Hz, on the FFT grid
  double center = 0.0;     // focusing frequency f_0
  std::vector<int> bins;   // FFT bin indices, J_f = bins.size()
  std::vector<double> offsets;  // bin frequency minus start, Hz
  double delta_f = 0.0;    // nominal spacing of the selected bins

  std::size_t size() const { return bins.size(); }
  double frequency(std::size_t j) const { return start + offsets[j]; }
};

struct BandPlan {
  std::vector<Band> bands;
  double fft_delta_f = 0.0;
};

BandPlan band_plan(const BandPlanParams& params, double fft_delta_f);

struct FrameGroup {
  Eigen::Index first = 0;
  Eigen::Index count = 0;
  bool shortened = false;  // fewer frames than requested were available
};

/// Groups of `frames_per_group` consecutive frames advancing by `advance`.
std::vector<FrameGroup> frame_groups(Eigen::Index frames, int frames_per_group, int advance = 1);

/// R(f_j) = (1/F) sum over the group of p p^H, for every bin of one band.
/// `bins` holds Q x frames matrices (raw or focused) indexed like band.bins.
std::vector<Eigen::MatrixXcd> band_scms(const std::vector<Eigen::MatrixXcd>& band_frames,
                                        const FrameGroup& group);

/// SCMs of one band for one frame group.
struct ScmStack {
  int band = 0;
  int group = 0;
  std::vector<Eigen::MatrixXcd> r;  // one Q x Q matrix per band bin
};

/// Band slices of the tensor, in band.bins order.
std::vector<Eigen::MatrixXcd> band_frames(const StftTensor& tensor, const Band& band);

/// Every (band, group) stack of an unfocused tensor. Memory grows with
/// bands x groups x bins; the pipeline streams band_scms() instead.
std::vector<ScmStack> estimate_scm(const StftTensor& tensor, const BandPlan& plan,
                                   int frames_per_group, int advance = 1);

}  // namespace phalcor
