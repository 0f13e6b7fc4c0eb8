#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "crossview/core/errors.hpp"

namespace crossview {

// Dense H x W x C value grid in row-major, channel-interleaved (HWC) layout.
// Used both for raster frames (values in [0,1]) and for latent codes.
struct Tensor3 {
  int h = 0;
  int w = 0;
  int c = 0;
  std::vector<float> data;

  Tensor3() = default;
  Tensor3(int height, int width, int channels, float fill = 0.0f)
      : h(height), w(width), c(channels),
        data(static_cast<std::size_t>(height) * width * channels, fill) {}

  float& at(int y, int x, int ch) {
    return data[(static_cast<std::size_t>(y) * w + x) * c + ch];
  }
  float at(int y, int x, int ch) const {
    return data[(static_cast<std::size_t>(y) * w + x) * c + ch];
  }

  std::size_t size() const { return data.size(); }
  bool same_shape(const Tensor3& o) const { return h == o.h && w == o.w && c == o.c; }

  std::string shape_str() const {
    return std::to_string(h) + "x" + std::to_string(w) + "x" + std::to_string(c);
  }
};

// Frames are Tensor3 with values in [0,1]; latents are unconstrained.
using Frame = Tensor3;
using Latent = Tensor3;

inline void require_same_shape(const Tensor3& a, const Tensor3& b, const char* where) {
  if (!a.same_shape(b)) {
    throw InputDomainError(std::string(where) + ": shape mismatch " + a.shape_str() +
                           " vs " + b.shape_str());
  }
}

// Channel-wise concatenation; spatial dims must agree.
inline Tensor3 concat_channels(const Tensor3& a, const Tensor3& b) {
  if (a.h != b.h || a.w != b.w) {
    throw InputDomainError("concat_channels: spatial mismatch " + a.shape_str() + " vs " +
                           b.shape_str());
  }
  Tensor3 out(a.h, a.w, a.c + b.c);
  for (int y = 0; y < a.h; ++y) {
    for (int x = 0; x < a.w; ++x) {
      for (int ch = 0; ch < a.c; ++ch) out.at(y, x, ch) = a.at(y, x, ch);
      for (int ch = 0; ch < b.c; ++ch) out.at(y, x, a.c + ch) = b.at(y, x, ch);
    }
  }
  return out;
}

// BT.601 luma; identity on single-channel input.
inline Tensor3 to_gray(const Tensor3& f) {
  if (f.c == 1) return f;
  if (f.c != 3) throw InputDomainError("to_gray: expected 1 or 3 channels, got " + f.shape_str());
  Tensor3 out(f.h, f.w, 1);
  for (int y = 0; y < f.h; ++y) {
    for (int x = 0; x < f.w; ++x) {
      out.at(y, x, 0) = 0.299f * f.at(y, x, 0) + 0.587f * f.at(y, x, 1) + 0.114f * f.at(y, x, 2);
    }
  }
  return out;
}

inline float max_abs_diff(const Tensor3& a, const Tensor3& b) {
  require_same_shape(a, b, "max_abs_diff");
  float m = 0.0f;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    m = std::max(m, std::abs(a.data[i] - b.data[i]));
  }
  return m;
}

inline double mean_sq_diff(const Tensor3& a, const Tensor3& b) {
  require_same_shape(a, b, "mean_sq_diff");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    const double d = static_cast<double>(a.data[i]) - b.data[i];
    acc += d * d;
  }
  return acc / static_cast<double>(a.data.size());
}

}  // namespace crossview
