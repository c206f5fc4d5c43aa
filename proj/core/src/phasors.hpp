#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <span>

#include <Eigen/Core>

namespace phalcor::detail {

/// K x F matrix exp(sign * i 2 pi f_j tau_k). Uniformly spaced frequencies are
/// filled by a rotation recurrence that is re-anchored every block.
inline Eigen::MatrixXcd delay_phasors(const Eigen::VectorXd& taus, std::span<const double> freqs,
                                      double sign) {
  constexpr double kTwoPi = 6.28318530717958647692;
  constexpr std::size_t kAnchor = 64;
  const auto k = taus.size();
  const auto f = static_cast<Eigen::Index>(freqs.size());
  Eigen::MatrixXcd e(k, f);
  bool uniform = freqs.size() > 2;
  const double step = uniform ? freqs[1] - freqs[0] : 0.0;
  for (std::size_t j = 2; uniform && j < freqs.size(); ++j)
    uniform = std::abs((freqs[j] - freqs[j - 1]) - step) <= 1e-9 * std::max(1.0, std::abs(step));
  if (!uniform) {
    for (Eigen::Index j = 0; j < f; ++j)
      for (Eigen::Index i = 0; i < k; ++i)
        e(i, j) = std::polar(1.0, sign * kTwoPi * freqs[static_cast<std::size_t>(j)] * taus(i));
    return e;
  }
  Eigen::VectorXcd rot(k);
  for (Eigen::Index i = 0; i < k; ++i) rot(i) = std::polar(1.0, sign * kTwoPi * step * taus(i));
  for (Eigen::Index j = 0; j < f; ++j) {
    if (static_cast<std::size_t>(j) % kAnchor == 0) {
      for (Eigen::Index i = 0; i < k; ++i)
        e(i, j) = std::polar(1.0, sign * kTwoPi * freqs[static_cast<std::size_t>(j)] * taus(i));
    } else {
      e.col(j) = e.col(j - 1).cwiseProduct(rot);
    }
  }
  return e;
}

}  // namespace phalcor::detail
