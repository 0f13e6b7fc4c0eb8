#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "crossview/core/errors.hpp"
#include "crossview/core/rng.hpp"
#include "crossview/core/tensor3.hpp"
#include "crossview/data/clips.hpp"
#include "crossview/data/layout.hpp"
#include "crossview/data/layout_io.hpp"
#include "crossview/data/manifest.hpp"
#include "crossview/io/png_io.hpp"

namespace crossview {

// Synthetic paired-view corpus: a two-hand skeleton follows smooth per-video
// trajectories; the target (ego-like) view shows it large over one per-video
// background, the source (exo-like) view shows it shrunk and shifted over a
// different background. Layout annotations are exact by construction and all
// output bytes are a pure function of the spec.
struct SyntheticFixtureSpec {
  int size = 32;            // square frame side, both views
  int videos = 4;
  int frames_per_video = 60;
  int clip_len = 30;
  double amplitude = 0.10;  // trajectory radius in normalized units
  double frequency = 1.0;   // trajectory cycles per video
  double hand_size = 0.17;  // target-view hand span in normalized units
  double noise_level = 0.0; // per-pixel Gaussian noise std; 0 = clean
  std::uint64_t seed = 7;

  void validate() const {
    if (size < 8) throw ConfigError("fixtures: size must be >= 8");
    if (videos < 1 || frames_per_video < 1) throw ConfigError("fixtures: empty corpus");
    if (clip_len < 1) throw ConfigError("fixtures: clip_len must be >= 1");
    if (amplitude < 0.0 || hand_size <= 0.0) throw ConfigError("fixtures: bad motion params");
    if (noise_level < 0.0) throw ConfigError("fixtures: negative noise level");
  }
};

inline nlohmann::json to_json(const SyntheticFixtureSpec& s) {
  return nlohmann::json{{"size", s.size},
                        {"videos", s.videos},
                        {"frames_per_video", s.frames_per_video},
                        {"clip_len", s.clip_len},
                        {"amplitude", s.amplitude},
                        {"frequency", s.frequency},
                        {"hand_size", s.hand_size},
                        {"noise_level", s.noise_level},
                        {"seed", s.seed}};
}

inline SyntheticFixtureSpec fixture_spec_from_json(const nlohmann::json& j) {
  SyntheticFixtureSpec s;
  s.size = j.value("size", s.size);
  s.videos = j.value("videos", s.videos);
  s.frames_per_video = j.value("frames_per_video", s.frames_per_video);
  s.clip_len = j.value("clip_len", s.clip_len);
  s.amplitude = j.value("amplitude", s.amplitude);
  s.frequency = j.value("frequency", s.frequency);
  s.hand_size = j.value("hand_size", s.hand_size);
  s.noise_level = j.value("noise_level", s.noise_level);
  s.seed = j.value("seed", s.seed);
  s.validate();
  return s;
}

namespace detail {

// 21-joint template in hand-local coordinates (u right, v down, fingertips
// up); wrist = joint 0, then four joints per finger, thumb first.
inline std::vector<std::array<double, 2>> hand_template() {
  std::vector<std::array<double, 2>> joints;
  joints.push_back({0.0, 0.45});
  const double angles_deg[5] = {-70.0, -20.0, 0.0, 20.0, 45.0};
  const double radii_thumb[4] = {0.25, 0.42, 0.55, 0.65};
  const double radii_finger[4] = {0.35, 0.60, 0.80, 0.95};
  for (int f = 0; f < 5; ++f) {
    const double th = angles_deg[f] * M_PI / 180.0;
    const double du = std::sin(th);
    const double dv = -std::cos(th);
    const double* radii = (f == 0) ? radii_thumb : radii_finger;
    for (int k = 0; k < 4; ++k) {
      joints.push_back({du * radii[k], 0.45 + dv * radii[k]});
    }
  }
  return joints;
}

inline PoseLayout target_pose(const SyntheticFixtureSpec& spec, int video, int frame) {
  const double t = static_cast<double>(frame);
  const double omega = 2.0 * M_PI * spec.frequency / spec.frames_per_video;
  const auto tmpl = hand_template();
  PoseLayout layout;
  for (int h = 0; h < 2; ++h) {
    const double phase = (h == 0 ? 0.9 : 1.7) * video + (h == 0 ? 0.0 : 0.4);
    const double cu = (h == 0 ? 0.36 : 0.64) +
                      spec.amplitude * (h == 0 ? std::sin(omega * t + phase)
                                               : std::cos(omega * t + phase));
    const double cv = (h == 0 ? 0.52 : 0.48) +
                      0.8 * spec.amplitude * (h == 0 ? std::cos(omega * t + phase)
                                                      : std::sin(omega * t + phase));
    Hand hand;
    for (const auto& j : tmpl) {
      const double u = h == 0 ? j[0] : -j[0];  // mirror the second hand
      hand.joints.push_back({cu + spec.hand_size * u, cv + spec.hand_size * j[1]});
      hand.visible.push_back(true);
    }
    layout.hands.push_back(std::move(hand));
  }
  return layout;
}

// Source view: the same skeleton shrunk 2× about frame center and shifted by
// a per-video offset.
inline PoseLayout source_pose(const PoseLayout& target, int video) {
  PoseLayout out;
  const double cu = 0.5 + 0.06 * (static_cast<double>(video % 3) - 1.0);
  const double cv = 0.5 + 0.06 * (static_cast<double>(video % 2) - 0.5);
  for (const auto& hand : target.hands) {
    Hand mapped;
    for (std::size_t j = 0; j < hand.joints.size(); ++j) {
      mapped.joints.push_back({0.5 * (hand.joints[j][0] - 0.5) + cu,
                               0.5 * (hand.joints[j][1] - 0.5) + cv});
      mapped.visible.push_back(hand.visible[j]);
    }
    out.hands.push_back(std::move(mapped));
  }
  return out;
}

// Smooth per-video, per-view background gradient with coefficients drawn from
// a stream keyed by (seed, view tag, video).
inline Frame fixture_background(const SyntheticFixtureSpec& spec, const char* view, int video) {
  Rng rng(mix_seed(mix_seed(spec.seed, view), static_cast<std::uint64_t>(video)));
  Frame bg(spec.size, spec.size, 3);
  for (int c = 0; c < 3; ++c) {
    const double base = 0.10 + 0.35 * rng.uniform() + 0.05 * ((video + c) % 4);
    const double gx = -0.20 + 0.40 * rng.uniform();
    const double gy = -0.20 + 0.40 * rng.uniform();
    for (int y = 0; y < spec.size; ++y) {
      for (int x = 0; x < spec.size; ++x) {
        const double fx = static_cast<double>(x) / (spec.size - 1);
        const double fy = static_cast<double>(y) / (spec.size - 1);
        bg.at(y, x, c) = static_cast<float>(std::clamp(base + gx * fx + gy * fy, 0.02, 0.75));
      }
    }
  }
  return bg;
}

// Skeleton composited over the background by per-channel max, optional seeded
// noise, clamped to [0,1].
inline Frame compose_frame(const Frame& background, const Frame& render, double noise_level,
                           std::uint64_t noise_seed) {
  Frame out = background;
  for (std::size_t i = 0; i < out.data.size(); ++i) {
    out.data[i] = std::max(out.data[i], render.data[i]);
  }
  if (noise_level > 0.0) {
    Rng rng(noise_seed);
    for (auto& v : out.data) {
      v = static_cast<float>(std::clamp(static_cast<double>(v) + noise_level * rng.normal(),
                                        0.0, 1.0));
    }
  }
  return out;
}

}  // namespace detail

// Writes the corpus (PNG frames + JSON layouts + manifest.json with relative
// paths) under out_dir and returns the loaded manifest with resolved paths.
inline DatasetManifest make_fixtures(const SyntheticFixtureSpec& spec,
                                     const std::filesystem::path& out_dir) {
  spec.validate();
  std::filesystem::create_directories(out_dir);
  DatasetManifest manifest;
  manifest.dataset_name = "synthetic-pairs";
  char name[64];
  for (int v = 0; v < spec.videos; ++v) {
    const std::string video_dir = "video_" + std::to_string(v);
    std::filesystem::create_directories(out_dir / video_dir);
    const Frame bg_src = detail::fixture_background(spec, "source-bg", v);
    const Frame bg_tgt = detail::fixture_background(spec, "target-bg", v);
    VideoRecord record;
    record.video_id = "video_" + std::to_string(v);
    record.subject_id = "s" + std::to_string(v % 2);
    record.object_id = "o" + std::to_string((v / 2) % 2);
    record.scene_id = "sc" + std::to_string(v % 2);
    for (int t = 0; t < spec.frames_per_video; ++t) {
      const PoseLayout ego = detail::target_pose(spec, v, t);
      const PoseLayout exo = detail::source_pose(ego, v);
      const Frame ego_render = render_pose_layout(ego, spec.size, spec.size);
      const Frame exo_render = render_pose_layout(exo, spec.size, spec.size);
      const Frame ego_frame = detail::compose_frame(
          bg_tgt, ego_render, spec.noise_level,
          mix_seed(mix_seed(spec.seed, "target-noise"),
                   static_cast<std::uint64_t>(v), static_cast<std::uint64_t>(t)));
      const Frame exo_frame = detail::compose_frame(
          bg_src, exo_render, spec.noise_level,
          mix_seed(mix_seed(spec.seed, "source-noise"),
                   static_cast<std::uint64_t>(v), static_cast<std::uint64_t>(t)));
      std::snprintf(name, sizeof(name), "exo_%03d.png", t);
      save_png(out_dir / video_dir / name, exo_frame);
      record.exo_frames.push_back(video_dir + "/" + name);
      std::snprintf(name, sizeof(name), "ego_%03d.png", t);
      save_png(out_dir / video_dir / name, ego_frame);
      record.ego_frames.push_back(video_dir + "/" + name);
      std::snprintf(name, sizeof(name), "exo_%03d.json", t);
      save_pose_layout(out_dir / video_dir / name, exo);
      record.exo_layouts.push_back(video_dir + "/" + name);
      std::snprintf(name, sizeof(name), "ego_%03d.json", t);
      save_pose_layout(out_dir / video_dir / name, ego);
      record.ego_layouts.push_back(video_dir + "/" + name);
    }
    for (auto& clip : segment_clips(record, spec.clip_len)) {
      manifest.clips.push_back(std::move(clip));
    }
  }
  manifest.sort_clips();
  manifest.validate();
  save_manifest(out_dir / "manifest.json", manifest);
  return load_manifest(out_dir / "manifest.json");
}

}  // namespace crossview
