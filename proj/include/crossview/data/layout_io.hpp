#pragma once

#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "crossview/core/errors.hpp"
#include "crossview/data/layout.hpp"
#include "crossview/io/png_io.hpp"

namespace crossview {

// Pose layout files: {"hands": [{"joints": [[u,v],...], "visible": [bool,...]}]}.
inline PoseLayout load_pose_layout(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("load_pose_layout: cannot open " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw IoError("load_pose_layout: " + path.string() + ": " + e.what());
  }
  PoseLayout layout;
  for (const auto& hj : j.at("hands")) {
    Hand hand;
    for (const auto& joint : hj.at("joints")) {
      hand.joints.push_back({joint.at(0).get<double>(), joint.at(1).get<double>()});
    }
    if (hj.contains("visible")) {
      for (const auto& v : hj.at("visible")) hand.visible.push_back(v.get<bool>());
    } else {
      hand.visible.assign(hand.joints.size(), true);
    }
    if (hand.visible.size() != hand.joints.size()) {
      throw IoError("load_pose_layout: joints/visible length mismatch in " + path.string());
    }
    layout.hands.push_back(std::move(hand));
  }
  return layout;
}

inline void save_pose_layout(const std::filesystem::path& path, const PoseLayout& layout) {
  nlohmann::json j;
  j["hands"] = nlohmann::json::array();
  for (const auto& hand : layout.hands) {
    nlohmann::json hj;
    hj["joints"] = nlohmann::json::array();
    for (const auto& joint : hand.joints) hj["joints"].push_back({joint[0], joint[1]});
    hj["visible"] = nlohmann::json::array();
    for (bool v : hand.visible) hj["visible"].push_back(v);
    j["hands"].push_back(std::move(hj));
  }
  std::ofstream out(path);
  if (!out) throw IoError("save_pose_layout: cannot open " + path.string() + " for writing");
  out << j.dump(2) << "\n";
}

// Mask layout files: single-channel PNG, 0/255.
inline MaskLayout load_mask_layout(const std::filesystem::path& path) {
  const Frame img = load_png(path);
  MaskLayout layout;
  layout.h = img.h;
  layout.w = img.w;
  layout.mask.resize(static_cast<std::size_t>(img.h) * img.w);
  for (int y = 0; y < img.h; ++y) {
    for (int x = 0; x < img.w; ++x) {
      layout.at(y, x) = img.at(y, x, 0) >= 0.5f ? 1 : 0;
    }
  }
  return layout;
}

inline void save_mask_layout(const std::filesystem::path& path, const MaskLayout& layout) {
  save_png(path, render_mask_layout(layout));
}

// Dispatch by extension: .json -> pose, .png -> mask.
inline LayoutVariant load_layout(const std::filesystem::path& path) {
  const auto ext = path.extension().string();
  if (ext == ".json") return load_pose_layout(path);
  if (ext == ".png") return load_mask_layout(path);
  throw IoError("load_layout: unsupported layout file " + path.string());
}

}  // namespace crossview
