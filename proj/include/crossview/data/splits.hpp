#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "crossview/core/errors.hpp"
#include "crossview/data/manifest.hpp"

namespace crossview {

enum class SplitStrategy { new_actions, new_objects, new_subjects, new_scenes };

inline const char* to_string(SplitStrategy s) {
  switch (s) {
    case SplitStrategy::new_actions: return "new_actions";
    case SplitStrategy::new_objects: return "new_objects";
    case SplitStrategy::new_subjects: return "new_subjects";
    case SplitStrategy::new_scenes: return "new_scenes";
  }
  throw ConfigError("to_string: unknown split strategy");
}

inline SplitStrategy split_strategy_from_string(const std::string& s) {
  if (s == "new_actions") return SplitStrategy::new_actions;
  if (s == "new_objects") return SplitStrategy::new_objects;
  if (s == "new_subjects") return SplitStrategy::new_subjects;
  if (s == "new_scenes") return SplitStrategy::new_scenes;
  throw ConfigError("unknown split strategy '" + s + "'");
}

struct SplitSpec {
  SplitStrategy strategy = SplitStrategy::new_actions;
  double train_fraction = 0.8;                   // new_actions
  std::string held_out_object;                   // new_objects: everything else trains
  std::vector<std::string> train_subjects;       // new_subjects
  std::vector<std::string> test_subjects;
  std::vector<std::string> train_scenes;         // new_scenes
  std::vector<std::string> test_scenes;
};

struct SplitResult {
  DatasetManifest train;
  DatasetManifest test;
};

namespace detail {

inline void require_known(const std::set<std::string>& known, const std::string& id,
                          const char* what) {
  if (known.find(id) == known.end()) {
    throw ConfigError(std::string("generate_split: ") + what + " '" + id +
                      "' not present in manifest");
  }
}

inline void require_disjoint(const std::vector<std::string>& a, const std::vector<std::string>& b,
                             const char* what) {
  std::set<std::string> sa(a.begin(), a.end());
  for (const auto& id : b) {
    if (sa.count(id)) {
      throw ConfigError(std::string("generate_split: ") + what + " '" + id +
                        "' listed on both sides");
    }
  }
}

}  // namespace detail

// Partitions a manifest's clips into train/test according to the strategy:
//   new_actions  — per video, the first ceil(train_fraction * n) clips by
//                  clip_index go to train, the rest to test;
//   new_objects  — clips whose object_id equals the held-out id go to test;
//   new_subjects — clips partitioned by subject id membership (clips whose
//                  subject appears in neither list are excluded);
//   new_scenes   — same, by scene id.
// The two sides are always disjoint and, for the identifier strategies, cover
// exactly the eligible clips. Either side empty is a configuration error.
inline SplitResult generate_split(const DatasetManifest& manifest, const SplitSpec& spec) {
  manifest.validate();
  SplitResult result;
  result.train.dataset_name = manifest.dataset_name;
  result.test.dataset_name = manifest.dataset_name;

  std::set<std::string> subjects, objects, scenes;
  for (const auto& clip : manifest.clips) {
    subjects.insert(clip.subject_id);
    objects.insert(clip.object_id);
    scenes.insert(clip.scene_id);
  }

  switch (spec.strategy) {
    case SplitStrategy::new_actions: {
      if (!(spec.train_fraction > 0.0 && spec.train_fraction < 1.0)) {
        throw ConfigError("generate_split: train_fraction must lie in (0,1)");
      }
      // Group clips per video, preserving (video_id, clip_index) order.
      std::map<std::string, std::vector<ClipPair>> by_video;
      for (const auto& clip : manifest.clips) by_video[clip.video_id].push_back(clip);
      for (auto& [vid, clips] : by_video) {
        std::sort(clips.begin(), clips.end(),
                  [](const ClipPair& a, const ClipPair& b) { return a.clip_index < b.clip_index; });
        const int n = static_cast<int>(clips.size());
        const int n_train = static_cast<int>(std::ceil(spec.train_fraction * n));
        for (int i = 0; i < n; ++i) {
          (i < n_train ? result.train : result.test).clips.push_back(clips[static_cast<std::size_t>(i)]);
        }
      }
      break;
    }
    case SplitStrategy::new_objects: {
      detail::require_known(objects, spec.held_out_object, "held-out object");
      for (const auto& clip : manifest.clips) {
        (clip.object_id == spec.held_out_object ? result.test : result.train).clips.push_back(clip);
      }
      break;
    }
    case SplitStrategy::new_subjects: {
      for (const auto& id : spec.train_subjects) detail::require_known(subjects, id, "train subject");
      for (const auto& id : spec.test_subjects) detail::require_known(subjects, id, "test subject");
      detail::require_disjoint(spec.train_subjects, spec.test_subjects, "subject");
      const std::set<std::string> tr(spec.train_subjects.begin(), spec.train_subjects.end());
      const std::set<std::string> te(spec.test_subjects.begin(), spec.test_subjects.end());
      for (const auto& clip : manifest.clips) {
        if (tr.count(clip.subject_id)) result.train.clips.push_back(clip);
        else if (te.count(clip.subject_id)) result.test.clips.push_back(clip);
      }
      break;
    }
    case SplitStrategy::new_scenes: {
      for (const auto& id : spec.train_scenes) detail::require_known(scenes, id, "train scene");
      for (const auto& id : spec.test_scenes) detail::require_known(scenes, id, "test scene");
      detail::require_disjoint(spec.train_scenes, spec.test_scenes, "scene");
      const std::set<std::string> tr(spec.train_scenes.begin(), spec.train_scenes.end());
      const std::set<std::string> te(spec.test_scenes.begin(), spec.test_scenes.end());
      for (const auto& clip : manifest.clips) {
        if (tr.count(clip.scene_id)) result.train.clips.push_back(clip);
        else if (te.count(clip.scene_id)) result.test.clips.push_back(clip);
      }
      break;
    }
  }

  if (result.train.clips.empty()) throw ConfigError("generate_split: empty train partition");
  if (result.test.clips.empty()) throw ConfigError("generate_split: empty test partition");
  result.train.sort_clips();
  result.test.sort_clips();

  // Carry cameras over for the videos each side actually references.
  auto copy_cameras = [&manifest](DatasetManifest& side) {
    for (const auto& clip : side.clips) {
      auto exo_it = manifest.exo_cameras.find(clip.video_id);
      if (exo_it != manifest.exo_cameras.end()) side.exo_cameras[clip.video_id] = exo_it->second;
      auto ego_it = manifest.ego_cameras.find(clip.video_id);
      if (ego_it != manifest.ego_cameras.end()) side.ego_cameras[clip.video_id] = ego_it->second;
    }
  };
  copy_cameras(result.train);
  copy_cameras(result.test);
  return result;
}

}  // namespace crossview
