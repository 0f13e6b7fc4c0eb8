#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <utility>
#include <variant>
#include <vector>

#include "crossview/core/errors.hpp"
#include "crossview/core/tensor3.hpp"
#include "crossview/data/camera.hpp"

namespace crossview {

inline constexpr int kJointsPerHand = 21;
inline constexpr int kMaxHands = 2;

// One hand: J joints as (u,v) in [0,1]^2 plus per-joint visibility.
// Off-frame joints keep their raw coordinates and are marked invisible.
struct Hand {
  std::vector<std::array<double, 2>> joints;
  std::vector<bool> visible;
};

struct PoseLayout {
  std::vector<Hand> hands;

  int total_visible() const {
    int n = 0;
    for (const auto& hand : hands) {
      for (bool v : hand.visible) n += v ? 1 : 0;
    }
    return n;
  }

  void validate() const {
    if (hands.size() > kMaxHands) throw InputDomainError("PoseLayout: more than two hands");
    for (const auto& hand : hands) {
      if (hand.joints.size() != hand.visible.size()) {
        throw InputDomainError("PoseLayout: joints/visibility length mismatch");
      }
      for (std::size_t j = 0; j < hand.joints.size(); ++j) {
        if (!hand.visible[j]) continue;
        const auto& p = hand.joints[j];
        if (p[0] < 0.0 || p[0] > 1.0 || p[1] < 0.0 || p[1] > 1.0) {
          throw InputDomainError("PoseLayout: visible joint outside [0,1]^2");
        }
      }
    }
  }
};

// Binary hand mask, same H x W as its paired frame.
struct MaskLayout {
  int h = 0;
  int w = 0;
  std::vector<std::uint8_t> mask;  // 0 or 1

  std::uint8_t at(int y, int x) const { return mask[static_cast<std::size_t>(y) * w + x]; }
  std::uint8_t& at(int y, int x) { return mask[static_cast<std::size_t>(y) * w + x]; }
};

using LayoutVariant = std::variant<PoseLayout, MaskLayout>;

// Skeleton edges for the standard 21-joint hand (wrist + 4 joints per
// finger); other joint counts fall back to a simple chain.
inline std::vector<std::pair<int, int>> hand_skeleton_edges(int joints) {
  std::vector<std::pair<int, int>> edges;
  if (joints == kJointsPerHand) {
    for (int finger = 0; finger < 5; ++finger) {
      const int base = 1 + finger * 4;
      edges.emplace_back(0, base);
      for (int k = 0; k < 3; ++k) edges.emplace_back(base + k, base + k + 1);
    }
  } else {
    for (int j = 0; j + 1 < joints; ++j) edges.emplace_back(j, j + 1);
  }
  return edges;
}

// Projects world-space joints through a pinhole camera into a normalized 2D
// pose. Joints behind the camera or outside the frame are kept with their
// computed coordinates but flagged invisible.
inline PoseLayout project_3d_to_2d(const std::vector<std::vector<Vec3>>& hands_world,
                                   const CameraModel& camera) {
  camera.validate();
  PoseLayout layout;
  for (const auto& joints3d : hands_world) {
    Hand hand;
    for (const auto& pw : joints3d) {
      const Vec3 pc = camera.world_to_camera(pw);
      if (pc.z <= 0.0) {
        hand.joints.push_back({0.0, 0.0});
        hand.visible.push_back(false);
        continue;
      }
      const double u_pix = camera.fx * pc.x / pc.z + camera.cx;
      const double v_pix = camera.fy * pc.y / pc.z + camera.cy;
      const double u = u_pix / camera.width;
      const double v = v_pix / camera.height;
      hand.joints.push_back({u, v});
      hand.visible.push_back(u >= 0.0 && u <= 1.0 && v >= 0.0 && v <= 1.0);
    }
    layout.hands.push_back(std::move(hand));
  }
  return layout;
}

struct RenderOptions {
  // Defaults follow the 256x256 reference look (3 px disks, 1 px lines) and
  // scale with resolution, with floors so hands stay visible on tiny frames.
  double joint_radius = -1.0;  // < 0: auto from resolution
  double line_width = -1.0;
  float joint_value = 1.0f;
  float edge_value = 0.6f;
  // Optional per-hand edge override; empty means hand_skeleton_edges(J).
  std::vector<std::pair<int, int>> edges;

  static double auto_radius(int height, int width) {
    return std::max(1.0, 3.0 * std::min(height, width) / 256.0);
  }
  static double auto_line_width(int height, int width) {
    return std::max(0.5, 1.0 * std::min(height, width) / 256.0);
  }
};

namespace detail {

inline double dist_point_segment(double px, double py, double ax, double ay, double bx,
                                 double by) {
  const double vx = bx - ax;
  const double vy = by - ay;
  const double len2 = vx * vx + vy * vy;
  double t = 0.0;
  if (len2 > 0.0) t = std::clamp(((px - ax) * vx + (py - ay) * vy) / len2, 0.0, 1.0);
  const double dx = px - (ax + t * vx);
  const double dy = py - (ay + t * vy);
  return std::sqrt(dx * dx + dy * dy);
}

// Antialias band width in pixels: full intensity within `radius`, then a
// linear ramp to zero over this many pixels. The ramp makes rendered
// intensities change proportionally under sub-pixel motion instead of
// flipping whole boundary pixels.
inline constexpr double kStampFeather = 1.0;

// Max-blend a value into every pixel near the segment [a, b] (a == b draws a
// disk): centers within `radius` get the full value, centers inside the
// feather band get a linearly decayed value. Scanning is restricted to the
// primitive's bounding box.
inline void stamp_segment(Tensor3& img, int channel, double ax, double ay, double bx, double by,
                          double radius, float value) {
  const double reach = radius + kStampFeather + 1.0;
  const int x_min = std::max(0, static_cast<int>(std::floor(std::min(ax, bx) - reach)));
  const int x_max = std::min(img.w - 1, static_cast<int>(std::ceil(std::max(ax, bx) + reach)));
  const int y_min = std::max(0, static_cast<int>(std::floor(std::min(ay, by) - reach)));
  const int y_max = std::min(img.h - 1, static_cast<int>(std::ceil(std::max(ay, by) + reach)));
  for (int y = y_min; y <= y_max; ++y) {
    for (int x = x_min; x <= x_max; ++x) {
      const double cx = x + 0.5;
      const double cy = y + 0.5;
      const double d = dist_point_segment(cx, cy, ax, ay, bx, by);
      const double w = std::clamp((radius + kStampFeather - d) / kStampFeather, 0.0, 1.0);
      if (w > 0.0) {
        float& px = img.at(y, x, channel);
        px = std::max(px, value * static_cast<float>(w));
      }
    }
  }
}

}  // namespace detail

// Rasterizes a pose layout to a 3-channel frame: hand h draws into channel h,
// visible joints as antialiased filled disks, skeleton edges as thick
// segments at a dimmer value. Pixels are lit by center-point distance tests
// and blended with max, so draw order never matters.
inline Frame render_pose_layout(const PoseLayout& layout, int height, int width,
                                const RenderOptions& opts = {}) {
  layout.validate();
  if (height < 1 || width < 1) throw InputDomainError("render_pose_layout: empty target");
  const double radius =
      opts.joint_radius >= 0.0 ? opts.joint_radius : RenderOptions::auto_radius(height, width);
  const double line_half = 0.5 * (opts.line_width >= 0.0 ? opts.line_width
                                                         : RenderOptions::auto_line_width(height, width));
  Frame img(height, width, 3);
  for (std::size_t h = 0; h < layout.hands.size(); ++h) {
    const Hand& hand = layout.hands[h];
    const int channel = static_cast<int>(h) % 3;
    const auto edges = opts.edges.empty()
                           ? hand_skeleton_edges(static_cast<int>(hand.joints.size()))
                           : opts.edges;
    for (const auto& [a, b] : edges) {
      if (a < 0 || b < 0 || a >= static_cast<int>(hand.joints.size()) ||
          b >= static_cast<int>(hand.joints.size())) {
        continue;
      }
      if (!hand.visible[a] || !hand.visible[b]) continue;
      detail::stamp_segment(img, channel, hand.joints[a][0] * width, hand.joints[a][1] * height,
                            hand.joints[b][0] * width, hand.joints[b][1] * height, line_half,
                            opts.edge_value);
    }
    for (std::size_t j = 0; j < hand.joints.size(); ++j) {
      if (!hand.visible[j]) continue;
      const double px = hand.joints[j][0] * width;
      const double py = hand.joints[j][1] * height;
      detail::stamp_segment(img, channel, px, py, px, py, radius, opts.joint_value);
    }
  }
  return img;
}

// Mask layouts rasterize to their own pixels (single channel).
inline Frame render_mask_layout(const MaskLayout& layout) {
  Frame img(layout.h, layout.w, 1);
  for (int y = 0; y < layout.h; ++y) {
    for (int x = 0; x < layout.w; ++x) img.at(y, x, 0) = layout.at(y, x) ? 1.0f : 0.0f;
  }
  return img;
}

inline Frame render_layout(const LayoutVariant& layout, int height, int width,
                           const RenderOptions& opts = {}) {
  if (std::holds_alternative<PoseLayout>(layout)) {
    return render_pose_layout(std::get<PoseLayout>(layout), height, width, opts);
  }
  const auto& mask = std::get<MaskLayout>(layout);
  if (mask.h != height || mask.w != width) {
    throw InputDomainError("render_layout: mask size does not match target");
  }
  return render_mask_layout(mask);
}

}  // namespace crossview
