#pragma once

#include <complex>
#include <memory>
#include <span>
#include <vector>

namespace phalcor::detail {

/// Real-input FFT of a fixed length backed by FFTW. Plans are created under a
/// global lock; execution is thread-safe per instance.
class RealFft {
 public:
  explicit RealFft(std::size_t n);
  ~RealFft();
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  std::size_t size() const { return n_; }
  std::size_t bins() const { return n_ / 2 + 1; }

  /// out.size() == bins()
  void forward(std::span<const double> in, std::span<std::complex<double>> out);
  /// Unnormalized inverse; out.size() == size()
  void inverse(std::span<const std::complex<double>> in, std::span<double> out);

 private:
  struct Plans;
  std::size_t n_;
  std::unique_ptr<Plans> plans_;
};

}  // namespace phalcor::detail
