#pragma once

#include <cmath>
#include <vector>

#include "crossview/core/errors.hpp"
#include "crossview/core/tensor3.hpp"

namespace crossview {

namespace detail {

// Normalized 11×11 Gaussian window, σ = 1.5 (the standard SSIM window).
inline const std::vector<double>& ssim_window() {
  static const std::vector<double> window = [] {
    constexpr int k = 11;
    constexpr double sigma = 1.5;
    std::vector<double> w(k * k);
    double total = 0.0;
    for (int y = 0; y < k; ++y) {
      for (int x = 0; x < k; ++x) {
        const double dy = y - (k - 1) / 2.0;
        const double dx = x - (k - 1) / 2.0;
        const double v = std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
        w[static_cast<std::size_t>(y * k + x)] = v;
        total += v;
      }
    }
    for (auto& v : w) v /= total;
    return w;
  }();
  return window;
}

}  // namespace detail

// Windowed structural similarity: 11×11 Gaussian weights (σ = 1.5),
// C1 = (0.01·L)², C2 = (0.03·L)² with L = 1, averaged over all fully-valid
// window positions. Color inputs are converted to luma first. Identical
// inputs yield exactly 1.0: the denominators are computed as numerator plus a
// difference term that vanishes bitwise when a == b, so the ratio is exact
// even when the compiler contracts multiply-adds into FMAs.
inline double ssim(const Frame& a, const Frame& b) {
  require_same_shape(a, b, "ssim");
  constexpr int k = 11;
  if (a.h < k || a.w < k) {
    throw InputDomainError("ssim: frames must be at least 11x11, got " + a.shape_str());
  }
  const Tensor3 ga = to_gray(a);
  const Tensor3 gb = to_gray(b);
  const auto& window = detail::ssim_window();
  constexpr double c1 = 0.01 * 0.01;
  constexpr double c2 = 0.03 * 0.03;
  double total = 0.0;
  long count = 0;
  for (int y0 = 0; y0 + k <= ga.h; ++y0) {
    for (int x0 = 0; x0 + k <= ga.w; ++x0) {
      double mua = 0.0, mub = 0.0, saa = 0.0, sbb = 0.0, sab = 0.0;
      for (int y = 0; y < k; ++y) {
        for (int x = 0; x < k; ++x) {
          const double w = window[static_cast<std::size_t>(y * k + x)];
          const double va = ga.at(y0 + y, x0 + x, 0);
          const double vb = gb.at(y0 + y, x0 + x, 0);
          mua += w * va;
          mub += w * vb;
          saa += w * va * va;
          sbb += w * vb * vb;
          sab += w * va * vb;
        }
      }
      // mua² + mub² = 2·mua·mub + (mua − mub)² and var_a + var_b =
      // 2·cov + E_w[(a − b)²] − (mua − mub)², so each denominator is the
      // matching numerator plus a term that is bitwise zero when a == b.
      const double dmu = mua - mub;
      const double cov = sab - mua * mub;
      const double num1 = 2.0 * mua * mub + c1;
      const double num2 = 2.0 * cov + c2;
      const double den1 = num1 + dmu * dmu;
      const double den2 = num2 + ((saa - sab) + (sbb - sab) - dmu * dmu);
      total += (num1 * num2) / (den1 * den2);
      ++count;
    }
  }
  return total / static_cast<double>(count);
}

// Peak signal-to-noise ratio in dB for unit-range frames: 10·log10(1/MSE),
// capped at 100 dB when MSE = 0.
inline double psnr(const Frame& a, const Frame& b) {
  require_same_shape(a, b, "psnr");
  const double mse = mean_sq_diff(a, b);
  if (mse == 0.0) return 100.0;
  return -10.0 * std::log10(mse);
}

}  // namespace crossview
