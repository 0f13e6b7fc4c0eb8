#pragma once

#include <memory>
#include <string>

#include "crossview/core/errors.hpp"
#include "crossview/core/tensor3.hpp"

namespace crossview {

// Frame <-> latent codec boundary. The desk-scale defaults are fixed
// (non-learned) codecs; a learned autoencoder can slot in behind the same
// interface.
class LatentCodec {
 public:
  virtual ~LatentCodec() = default;
  virtual Latent encode(const Frame& frame) const = 0;
  virtual Frame decode(const Latent& latent) const = 0;
  virtual int factor() const = 0;  // spatial downsample factor f
  virtual std::string name() const = 0;
};

// Exact round trip; latent space is pixel space.
class IdentityCodec final : public LatentCodec {
 public:
  Latent encode(const Frame& frame) const override { return frame; }
  Frame decode(const Latent& latent) const override { return latent; }
  int factor() const override { return 1; }
  std::string name() const override { return "identity"; }
};

// Fixed 4× average-pool encoder with nearest-neighbor upsampling decoder;
// exercises the f > 1 shape paths without a learned model.
class AvgPool4Codec final : public LatentCodec {
 public:
  static constexpr int kFactor = 4;

  Latent encode(const Frame& frame) const override {
    if (frame.h % kFactor != 0 || frame.w % kFactor != 0) {
      throw InputDomainError("AvgPool4Codec: frame dims must be divisible by 4, got " +
                             frame.shape_str());
    }
    Latent out(frame.h / kFactor, frame.w / kFactor, frame.c);
    const float inv = 1.0f / (kFactor * kFactor);
    for (int y = 0; y < out.h; ++y) {
      for (int x = 0; x < out.w; ++x) {
        for (int c = 0; c < out.c; ++c) {
          float acc = 0.0f;
          for (int dy = 0; dy < kFactor; ++dy) {
            for (int dx = 0; dx < kFactor; ++dx) {
              acc += frame.at(y * kFactor + dy, x * kFactor + dx, c);
            }
          }
          out.at(y, x, c) = acc * inv;
        }
      }
    }
    return out;
  }

  Frame decode(const Latent& latent) const override {
    Frame out(latent.h * kFactor, latent.w * kFactor, latent.c);
    for (int y = 0; y < out.h; ++y) {
      for (int x = 0; x < out.w; ++x) {
        for (int c = 0; c < out.c; ++c) {
          out.at(y, x, c) = latent.at(y / kFactor, x / kFactor, c);
        }
      }
    }
    return out;
  }

  int factor() const override { return kFactor; }
  std::string name() const override { return "avgpool4"; }
};

inline std::unique_ptr<LatentCodec> make_codec(const std::string& name) {
  if (name == "identity") return std::make_unique<IdentityCodec>();
  if (name == "avgpool4") return std::make_unique<AvgPool4Codec>();
  throw ConfigError("unknown codec '" + name + "'");
}

// Conditioning input: codec-encoded source frame and codec-encoded rendered
// target layout, concatenated channel-wise.
inline Latent build_condition(const LatentCodec& codec, const Frame& source_frame,
                              const Frame& target_layout_render) {
  return concat_channels(codec.encode(source_frame), codec.encode(target_layout_render));
}

}  // namespace crossview
