#pragma once

#include <algorithm>
#include <cmath>

#include "crossview/core/errors.hpp"
#include "crossview/core/tensor3.hpp"

namespace crossview {

// Axis-aligned crop window in source pixel units.
struct Roi {
  double x = 0.0;
  double y = 0.0;
  double width = 0.0;
  double height = 0.0;

  static Roi full(const Tensor3& f) { return {0.0, 0.0, double(f.w), double(f.h)}; }
};

// Bilinear crop-and-resize to a square target frame.
//
// Sampling convention: output pixel centers map to half-pixel source centers,
//   sx = roi.x + (dx + 0.5) * roi.width / target - 0.5
// with the four taps clamped to the pixels covered by the roi. With a
// full-frame roi at the target size the map is the identity.
inline Frame crop_resize(const Frame& frame, const Roi& roi, int target) {
  if (target < 1) throw InputDomainError("crop_resize: target must be >= 1");
  if (frame.h < 1 || frame.w < 1) throw InputDomainError("crop_resize: empty frame");
  if (roi.width < 1.0 || roi.height < 1.0 || roi.x < 0.0 || roi.y < 0.0 ||
      roi.x + roi.width > frame.w + 1e-9 || roi.y + roi.height > frame.h + 1e-9) {
    throw InputDomainError("crop_resize: roi out of bounds");
  }

  const double sx_scale = roi.width / target;
  const double sy_scale = roi.height / target;
  const int x_lo = static_cast<int>(std::floor(roi.x));
  const int y_lo = static_cast<int>(std::floor(roi.y));
  const int x_hi = std::min(frame.w - 1, static_cast<int>(std::ceil(roi.x + roi.width)) - 1);
  const int y_hi = std::min(frame.h - 1, static_cast<int>(std::ceil(roi.y + roi.height)) - 1);

  Frame out(target, target, frame.c);
  for (int dy = 0; dy < target; ++dy) {
    const double sy = roi.y + (dy + 0.5) * sy_scale - 0.5;
    const double fy = sy - std::floor(sy);
    const int y0 = std::clamp(static_cast<int>(std::floor(sy)), y_lo, y_hi);
    const int y1 = std::clamp(static_cast<int>(std::floor(sy)) + 1, y_lo, y_hi);
    for (int dx = 0; dx < target; ++dx) {
      const double sx = roi.x + (dx + 0.5) * sx_scale - 0.5;
      const double fx = sx - std::floor(sx);
      const int x0 = std::clamp(static_cast<int>(std::floor(sx)), x_lo, x_hi);
      const int x1 = std::clamp(static_cast<int>(std::floor(sx)) + 1, x_lo, x_hi);
      for (int ch = 0; ch < frame.c; ++ch) {
        const double top = (1.0 - fx) * frame.at(y0, x0, ch) + fx * frame.at(y0, x1, ch);
        const double bot = (1.0 - fx) * frame.at(y1, x0, ch) + fx * frame.at(y1, x1, ch);
        out.at(dy, dx, ch) = static_cast<float>((1.0 - fy) * top + fy * bot);
      }
    }
  }
  return out;
}

}  // namespace crossview
