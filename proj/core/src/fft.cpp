#include "fft.hpp"

#include <algorithm>
#include <mutex>

#include <fftw3.h>

namespace phalcor::detail {

namespace {
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace

struct RealFft::Plans {
  double* real = nullptr;
  fftw_complex* spec = nullptr;
  fftw_plan fwd = nullptr;
  fftw_plan inv = nullptr;
};

RealFft::RealFft(std::size_t n) : n_(n), plans_(std::make_unique<Plans>()) {
  std::lock_guard lock(planner_mutex());
  plans_->real = fftw_alloc_real(n);
  plans_->spec = fftw_alloc_complex(n / 2 + 1);
  const int ni = static_cast<int>(n);
  plans_->fwd = fftw_plan_dft_r2c_1d(ni, plans_->real, plans_->spec, FFTW_ESTIMATE);
  plans_->inv = fftw_plan_dft_c2r_1d(ni, plans_->spec, plans_->real, FFTW_ESTIMATE);
}

RealFft::~RealFft() {
  std::lock_guard lock(planner_mutex());
  fftw_destroy_plan(plans_->fwd);
  fftw_destroy_plan(plans_->inv);
  fftw_free(plans_->real);
  fftw_free(plans_->spec);
}

void RealFft::forward(std::span<const double> in, std::span<std::complex<double>> out) {
  std::copy(in.begin(), in.end(), plans_->real);
  std::fill(plans_->real + in.size(), plans_->real + n_, 0.0);
  fftw_execute(plans_->fwd);
  const auto* s = reinterpret_cast<const std::complex<double>*>(plans_->spec);
  std::copy(s, s + bins(), out.begin());
}

void RealFft::inverse(std::span<const std::complex<double>> in, std::span<double> out) {
  auto* s = reinterpret_cast<std::complex<double>*>(plans_->spec);
  std::copy(in.begin(), in.end(), s);
  fftw_execute(plans_->inv);
  std::copy(plans_->real, plans_->real + n_, out.begin());
}

}  // namespace phalcor::detail
