#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "crossview/core/errors.hpp"
#include "crossview/data/camera.hpp"

namespace crossview {

// One synchronized exocentric/egocentric clip pair. Frame and layout paths are
// stored relative to the manifest file's directory; resolve_paths() rewrites
// them to absolute paths after loading.
struct ClipPair {
  std::string video_id;
  std::string subject_id;
  std::string object_id;
  std::string scene_id;
  int clip_index = 0;
  std::vector<std::string> exo_frames;
  std::vector<std::string> ego_frames;
  std::vector<std::string> exo_layouts;  // may be empty (layouts optional)
  std::vector<std::string> ego_layouts;

  int frame_count() const { return static_cast<int>(exo_frames.size()); }

  void validate() const {
    if (video_id.empty()) throw InputDomainError("ClipPair: empty video_id");
    if (clip_index < 0) throw InputDomainError("ClipPair: negative clip_index");
    if (exo_frames.empty()) throw InputDomainError("ClipPair " + video_id + ": no exo frames");
    if (exo_frames.size() != ego_frames.size()) {
      throw InputDomainError("ClipPair " + video_id + ": exo/ego frame count mismatch");
    }
    if (!exo_layouts.empty() && exo_layouts.size() != exo_frames.size()) {
      throw InputDomainError("ClipPair " + video_id + ": exo layout count mismatch");
    }
    if (!ego_layouts.empty() && ego_layouts.size() != ego_frames.size()) {
      throw InputDomainError("ClipPair " + video_id + ": ego layout count mismatch");
    }
  }
};

struct DatasetManifest {
  std::string dataset_name;
  std::vector<ClipPair> clips;
  // Optional per-video camera pairs keyed by video_id.
  std::map<std::string, CameraModel> exo_cameras;
  std::map<std::string, CameraModel> ego_cameras;

  void validate() const {
    for (const auto& clip : clips) clip.validate();
  }

  // Deterministic order: (video_id, clip_index) ascending.
  void sort_clips() {
    std::sort(clips.begin(), clips.end(), [](const ClipPair& a, const ClipPair& b) {
      return std::tie(a.video_id, a.clip_index) < std::tie(b.video_id, b.clip_index);
    });
  }

  std::vector<std::string> video_ids() const {
    std::vector<std::string> ids;
    for (const auto& clip : clips) {
      if (ids.empty() || ids.back() != clip.video_id) {
        if (std::find(ids.begin(), ids.end(), clip.video_id) == ids.end()) {
          ids.push_back(clip.video_id);
        }
      }
    }
    return ids;
  }
};

namespace detail {

inline nlohmann::json camera_to_json(const CameraModel& cam) {
  nlohmann::json j;
  j["fx"] = cam.fx;
  j["fy"] = cam.fy;
  j["cx"] = cam.cx;
  j["cy"] = cam.cy;
  j["width"] = cam.width;
  j["height"] = cam.height;
  j["rotation"] = cam.rotation;
  j["translation"] = cam.translation;
  return j;
}

inline CameraModel camera_from_json(const nlohmann::json& j) {
  CameraModel cam;
  cam.fx = j.at("fx").get<double>();
  cam.fy = j.at("fy").get<double>();
  cam.cx = j.at("cx").get<double>();
  cam.cy = j.at("cy").get<double>();
  cam.width = j.at("width").get<int>();
  cam.height = j.at("height").get<int>();
  const auto& rot = j.at("rotation");
  for (int i = 0; i < 9; ++i) cam.rotation[static_cast<std::size_t>(i)] = rot.at(i).get<double>();
  const auto& tr = j.at("translation");
  for (int i = 0; i < 3; ++i) cam.translation[static_cast<std::size_t>(i)] = tr.at(i).get<double>();
  return cam;
}

inline std::vector<std::string> string_list(const nlohmann::json& j, const char* key) {
  std::vector<std::string> out;
  if (!j.contains(key)) return out;
  for (const auto& item : j.at(key)) out.push_back(item.get<std::string>());
  return out;
}

}  // namespace detail

inline nlohmann::json manifest_to_json(const DatasetManifest& manifest) {
  nlohmann::json j;
  j["dataset_name"] = manifest.dataset_name;
  j["clips"] = nlohmann::json::array();
  for (const auto& clip : manifest.clips) {
    nlohmann::json cj;
    cj["video_id"] = clip.video_id;
    cj["subject_id"] = clip.subject_id;
    cj["object_id"] = clip.object_id;
    cj["scene_id"] = clip.scene_id;
    cj["clip_index"] = clip.clip_index;
    cj["exo_frames"] = clip.exo_frames;
    cj["ego_frames"] = clip.ego_frames;
    if (!clip.exo_layouts.empty()) cj["exo_layouts"] = clip.exo_layouts;
    if (!clip.ego_layouts.empty()) cj["ego_layouts"] = clip.ego_layouts;
    j["clips"].push_back(std::move(cj));
  }
  if (!manifest.exo_cameras.empty() || !manifest.ego_cameras.empty()) {
    nlohmann::json cams;
    for (const auto& [vid, cam] : manifest.exo_cameras) cams[vid]["exo"] = detail::camera_to_json(cam);
    for (const auto& [vid, cam] : manifest.ego_cameras) cams[vid]["ego"] = detail::camera_to_json(cam);
    j["cameras"] = std::move(cams);
  }
  return j;
}

inline DatasetManifest manifest_from_json(const nlohmann::json& j) {
  DatasetManifest manifest;
  try {
    manifest.dataset_name = j.at("dataset_name").get<std::string>();
    for (const auto& cj : j.at("clips")) {
      ClipPair clip;
      clip.video_id = cj.at("video_id").get<std::string>();
      clip.subject_id = cj.value("subject_id", std::string());
      clip.object_id = cj.value("object_id", std::string());
      clip.scene_id = cj.value("scene_id", std::string());
      clip.clip_index = cj.at("clip_index").get<int>();
      clip.exo_frames = detail::string_list(cj, "exo_frames");
      clip.ego_frames = detail::string_list(cj, "ego_frames");
      clip.exo_layouts = detail::string_list(cj, "exo_layouts");
      clip.ego_layouts = detail::string_list(cj, "ego_layouts");
      manifest.clips.push_back(std::move(clip));
    }
    if (j.contains("cameras")) {
      for (const auto& [vid, pair] : j.at("cameras").items()) {
        if (pair.contains("exo")) manifest.exo_cameras[vid] = detail::camera_from_json(pair.at("exo"));
        if (pair.contains("ego")) manifest.ego_cameras[vid] = detail::camera_from_json(pair.at("ego"));
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("manifest_from_json: malformed manifest: ") + e.what());
  }
  manifest.sort_clips();
  manifest.validate();
  return manifest;
}

inline void save_manifest(const std::filesystem::path& path, const DatasetManifest& manifest) {
  std::ofstream out(path);
  if (!out) throw IoError("save_manifest: cannot open " + path.string() + " for writing");
  out << manifest_to_json(manifest).dump(2) << "\n";
}

// Loads a manifest. Relative frame/layout paths inside the file are rewritten
// relative to the manifest's own directory so callers can open them directly.
inline DatasetManifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("load_manifest: cannot open " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw IoError("load_manifest: " + path.string() + ": " + e.what());
  }
  DatasetManifest manifest = manifest_from_json(j);
  const std::filesystem::path base = path.has_parent_path() ? path.parent_path() : ".";
  auto rebase = [&base](std::vector<std::string>& paths) {
    for (auto& p : paths) {
      std::filesystem::path fp(p);
      if (fp.is_relative()) p = (base / fp).string();
    }
  };
  for (auto& clip : manifest.clips) {
    rebase(clip.exo_frames);
    rebase(clip.ego_frames);
    rebase(clip.exo_layouts);
    rebase(clip.ego_layouts);
  }
  return manifest;
}

}  // namespace crossview
