#pragma once

#include <string>

#include <json.hpp>

#include "crossview/core/errors.hpp"

namespace crossview {

enum class LayoutMode { pose, mask };

inline const char* to_string(LayoutMode m) {
  return m == LayoutMode::pose ? "pose" : "mask";
}

inline LayoutMode layout_mode_from_string(const std::string& s) {
  if (s == "pose") return LayoutMode::pose;
  if (s == "mask") return LayoutMode::mask;
  throw ConfigError("unknown layout mode '" + s + "'");
}

// Layout-translator architecture. input_channels covers the channel-wise
// concatenation of the source frame (C1) and the rendered source layout (C2).
struct TranslatorConfig {
  int height = 256;
  int width = 256;
  int patch = 16;
  int dim = 192;
  int encoder_blocks = 6;
  int decoder_blocks = 6;
  int heads = 4;
  int mlp_ratio = 4;
  int queries = 42;  // pose mode: 2 hands × 21 joints
  int input_channels = 6;
  LayoutMode mode = LayoutMode::pose;

  int tokens() const { return (height / patch) * (width / patch); }
  int patch_dim() const { return patch * patch * input_channels; }
  // Decoder query count: learned joint queries in pose mode, one query per
  // patch in mask mode (each emits a patch of per-pixel class logits).
  int query_count() const { return mode == LayoutMode::pose ? queries : tokens(); }

  void validate() const {
    if (height < 1 || width < 1) throw ConfigError("translator: non-positive frame size");
    if (patch < 1 || height % patch != 0 || width % patch != 0) {
      throw ConfigError("translator: frame dims must be divisible by patch size");
    }
    if (dim < 1 || heads < 1 || dim % heads != 0) {
      throw ConfigError("translator: dim must divide into heads");
    }
    if (encoder_blocks < 0 || decoder_blocks < 0) throw ConfigError("translator: negative depth");
    if (mlp_ratio < 1) throw ConfigError("translator: mlp_ratio must be >= 1");
    if (mode == LayoutMode::pose && queries < 1) throw ConfigError("translator: queries must be >= 1");
    if (input_channels < 1) throw ConfigError("translator: input_channels must be >= 1");
  }
};

inline nlohmann::json to_json(const TranslatorConfig& c) {
  return nlohmann::json{{"height", c.height},
                        {"width", c.width},
                        {"patch", c.patch},
                        {"dim", c.dim},
                        {"encoder_blocks", c.encoder_blocks},
                        {"decoder_blocks", c.decoder_blocks},
                        {"heads", c.heads},
                        {"mlp_ratio", c.mlp_ratio},
                        {"queries", c.queries},
                        {"input_channels", c.input_channels},
                        {"mode", to_string(c.mode)}};
}

inline TranslatorConfig translator_config_from_json(const nlohmann::json& j) {
  TranslatorConfig c;
  c.height = j.value("height", c.height);
  c.width = j.value("width", c.width);
  c.patch = j.value("patch", c.patch);
  c.dim = j.value("dim", c.dim);
  c.encoder_blocks = j.value("encoder_blocks", c.encoder_blocks);
  c.decoder_blocks = j.value("decoder_blocks", c.decoder_blocks);
  c.heads = j.value("heads", c.heads);
  c.mlp_ratio = j.value("mlp_ratio", c.mlp_ratio);
  c.queries = j.value("queries", c.queries);
  c.input_channels = j.value("input_channels", c.input_channels);
  if (j.contains("mode")) c.mode = layout_mode_from_string(j.at("mode").get<std::string>());
  c.validate();
  return c;
}

}  // namespace crossview
