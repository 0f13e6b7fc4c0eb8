#pragma once

#include <string>
#include <utility>
#include <vector>

#include "crossview/core/errors.hpp"
#include "crossview/data/manifest.hpp"

namespace crossview {

// Contiguous, non-overlapping [start, end) ranges of length clip_len covering
// the first floor(frame_count / clip_len) * clip_len frames; the remainder is
// dropped. Returns an empty list when frame_count < clip_len.
inline std::vector<std::pair<int, int>> clip_ranges(int frame_count, int clip_len) {
  if (clip_len < 1) throw InputDomainError("clip_ranges: clip_len must be >= 1");
  if (frame_count < 0) throw InputDomainError("clip_ranges: negative frame_count");
  std::vector<std::pair<int, int>> ranges;
  const int count = frame_count / clip_len;
  ranges.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) ranges.emplace_back(i * clip_len, (i + 1) * clip_len);
  return ranges;
}

// One source video's aligned frame and layout file lists plus its metadata,
// before segmentation into fixed-length clips.
struct VideoRecord {
  std::string video_id;
  std::string subject_id;
  std::string object_id;
  std::string scene_id;
  std::vector<std::string> exo_frames;
  std::vector<std::string> ego_frames;
  std::vector<std::string> exo_layouts;  // empty, or aligned with exo_frames
  std::vector<std::string> ego_layouts;

  void validate() const {
    if (exo_frames.size() != ego_frames.size()) {
      throw InputDomainError("VideoRecord " + video_id + ": exo/ego frame count mismatch");
    }
    if (!exo_layouts.empty() && exo_layouts.size() != exo_frames.size()) {
      throw InputDomainError("VideoRecord " + video_id + ": exo layout count mismatch");
    }
    if (!ego_layouts.empty() && ego_layouts.size() != ego_frames.size()) {
      throw InputDomainError("VideoRecord " + video_id + ": ego layout count mismatch");
    }
  }
};

// Divides a video into floor(T/clip_len) contiguous clips in temporal order,
// clip_index 0,1,2,...; trailing frames shorter than clip_len are dropped.
inline std::vector<ClipPair> segment_clips(const VideoRecord& video, int clip_len) {
  video.validate();
  std::vector<ClipPair> clips;
  const auto ranges = clip_ranges(static_cast<int>(video.exo_frames.size()), clip_len);
  auto slice = [](const std::vector<std::string>& src, int begin, int end) {
    if (src.empty()) return std::vector<std::string>();
    return std::vector<std::string>(src.begin() + begin, src.begin() + end);
  };
  for (std::size_t i = 0; i < ranges.size(); ++i) {
    const auto [begin, end] = ranges[i];
    ClipPair clip;
    clip.video_id = video.video_id;
    clip.subject_id = video.subject_id;
    clip.object_id = video.object_id;
    clip.scene_id = video.scene_id;
    clip.clip_index = static_cast<int>(i);
    clip.exo_frames = slice(video.exo_frames, begin, end);
    clip.ego_frames = slice(video.ego_frames, begin, end);
    clip.exo_layouts = slice(video.exo_layouts, begin, end);
    clip.ego_layouts = slice(video.ego_layouts, begin, end);
    clips.push_back(std::move(clip));
  }
  return clips;
}

}  // namespace crossview
