// crossview — command-line front end for the cross-view translation pipeline.
//
// Subcommands: make-fixtures, build-manifest, split, train, infer, evaluate.
// Configuration is a single JSON document (--config FILE, or the
// CROSSVIEW_CONFIG environment variable) with dotted-path overrides via
// --set key.path=value. Logs go to stderr; machine-readable results go to
// stdout or files. Exit codes: 0 success, 1 usage/configuration error,
// 2 runtime failure.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "crossview/core/errors.hpp"
#include "crossview/core/image_ops.hpp"
#include "crossview/core/rng.hpp"
#include "crossview/data/clips.hpp"
#include "crossview/data/layout_io.hpp"
#include "crossview/data/manifest.hpp"
#include "crossview/data/splits.hpp"
#include "crossview/eval/report.hpp"
#include "crossview/io/png_io.hpp"
#include "crossview/pipeline/fixtures.hpp"
#include "crossview/pipeline/pipeline.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

using namespace crossview;

// --- shared configuration plumbing ------------------------------------------

struct GlobalOpts {
  std::string config_path;            // pre-filled from CROSSVIEW_CONFIG by CLI11
  std::vector<std::string> overrides; // --set key.path=value
};

// Applies one dotted-path override onto the config document. The value is
// parsed as JSON when possible (numbers, booleans, arrays) and kept as a
// string otherwise.
void apply_override(json& doc, const std::string& entry) {
  const auto eq = entry.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError("--set expects key.path=value, got '" + entry + "'");
  }
  const std::string key = entry.substr(0, eq);
  const std::string raw = entry.substr(eq + 1);
  json value = json::parse(raw, nullptr, /*allow_exceptions=*/false);
  if (value.is_discarded()) value = raw;

  json* cur = &doc;
  std::size_t pos = 0;
  try {
    while (true) {
      const auto dot = key.find('.', pos);
      const std::string part =
          key.substr(pos, dot == std::string::npos ? std::string::npos : dot - pos);
      if (part.empty()) throw ConfigError("--set: empty path segment in '" + key + "'");
      if (dot == std::string::npos) {
        (*cur)[part] = value;
        return;
      }
      cur = &(*cur)[part];
      pos = dot + 1;
    }
  } catch (const json::exception& e) {
    throw ConfigError("--set: cannot apply '" + entry + "': " + e.what());
  }
}

// Config file (if any) merged with --set overrides.
json resolve_config(const GlobalOpts& global) {
  json doc = json::object();
  if (!global.config_path.empty()) {
    std::ifstream in(global.config_path);
    if (!in) throw ConfigError("cannot open config file " + global.config_path);
    try {
      in >> doc;
    } catch (const json::exception& e) {
      throw ConfigError("config file " + global.config_path + ": " + e.what());
    }
    if (!doc.is_object()) {
      throw ConfigError("config file " + global.config_path + ": top level must be an object");
    }
  }
  for (const auto& entry : global.overrides) apply_override(doc, entry);
  return doc;
}

void log_config_hash(const json& resolved) {
  std::cerr << "config_hash=" << fnv1a(resolved.dump()) << "\n";
}

// --- small helpers ----------------------------------------------------------

Frame resize_square(const Frame& f, int h, int w, const char* what) {
  if (f.h == h && f.w == w) return f;
  if (h != w) {
    throw ConfigError(std::string(what) + ": non-square resize target " + std::to_string(h) +
                      "x" + std::to_string(w) + " is not supported");
  }
  return crop_resize(f, Roi::full(f), h);
}

std::vector<std::string> png_files_sorted(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw IoError(dir.string() + " is not a directory");
  std::vector<std::string> out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".png") {
      out.push_back(entry.path().string());
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::string frame_name(int index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "frame_%03d.png", index);
  return buf;
}

// --- make-fixtures ----------------------------------------------------------

struct MakeFixturesOpts {
  std::string out;
  std::optional<int> videos, frames, size, clip_len;
  std::optional<double> noise;
  std::optional<std::uint64_t> seed;
};

void cmd_make_fixtures(const GlobalOpts& global, const MakeFixturesOpts& o) {
  const json config = resolve_config(global);
  log_config_hash(config);
  SyntheticFixtureSpec spec =
      fixture_spec_from_json(config.value("fixtures", json::object()));
  if (o.videos) spec.videos = *o.videos;
  if (o.frames) spec.frames_per_video = *o.frames;
  if (o.size) spec.size = *o.size;
  if (o.clip_len) spec.clip_len = *o.clip_len;
  if (o.noise) spec.noise_level = *o.noise;
  if (o.seed) spec.seed = *o.seed;
  spec.validate();

  const fs::path out_dir(o.out);
  fs::create_directories(out_dir);
  const DatasetManifest manifest = make_fixtures(spec, out_dir);
  std::cerr << "fixtures: " << spec.videos << " videos x " << spec.frames_per_video
            << " frames (" << spec.size << "x" << spec.size << "), " << manifest.clips.size()
            << " clips\n";
  std::cout << (out_dir / "manifest.json").string() << "\n";
}

// --- build-manifest ---------------------------------------------------------

struct BuildManifestOpts {
  std::string root;
  std::string out;
  std::string dataset;
  int clip_len = 30;
};

// Collects files named <prefix>NNN<ext> from a directory, sorted by name.
std::vector<std::string> collect_files(const fs::path& dir, const std::string& prefix,
                                       const std::string& ext) {
  std::vector<std::string> out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string name = entry.path().filename().string();
    if (name.rfind(prefix, 0) == 0 && entry.path().extension() == ext) {
      out.push_back(entry.path().string());
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::string> collect_dir_files(const fs::path& dir) {
  std::vector<std::string> out;
  if (!fs::is_directory(dir)) return out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file()) out.push_back(entry.path().string());
  }
  std::sort(out.begin(), out.end());
  return out;
}

void cmd_build_manifest(const GlobalOpts& global, const BuildManifestOpts& o) {
  const json config = resolve_config(global);
  log_config_hash(config);
  const fs::path root(o.root);
  if (!fs::is_directory(root)) throw IoError("build-manifest: " + o.root + " is not a directory");

  const fs::path out_path =
      o.out.empty() ? root / "manifest.json" : fs::path(o.out);
  const fs::path out_base =
      out_path.has_parent_path() ? out_path.parent_path() : fs::path(".");

  DatasetManifest manifest;
  manifest.dataset_name =
      o.dataset.empty() ? fs::absolute(root).filename().string() : o.dataset;
  if (manifest.dataset_name.empty()) manifest.dataset_name = "dataset";

  std::vector<fs::path> video_dirs;
  for (const auto& entry : fs::directory_iterator(root)) {
    if (entry.is_directory()) video_dirs.push_back(entry.path());
  }
  std::sort(video_dirs.begin(), video_dirs.end());

  int videos_used = 0;
  for (const auto& dir : video_dirs) {
    VideoRecord rec;
    rec.video_id = dir.filename().string();
    rec.exo_frames = collect_files(dir, "exo_", ".png");
    rec.ego_frames = collect_files(dir, "ego_", ".png");
    if (rec.exo_frames.empty() && rec.ego_frames.empty()) {
      std::cerr << "build-manifest: skipping " << dir.string() << " (no frames)\n";
      continue;
    }
    rec.exo_layouts = collect_files(dir, "exo_", ".json");
    rec.ego_layouts = collect_files(dir, "ego_", ".json");
    if (rec.exo_layouts.empty()) rec.exo_layouts = collect_dir_files(dir / "exo_layouts");
    if (rec.ego_layouts.empty()) rec.ego_layouts = collect_dir_files(dir / "ego_layouts");

    rec.subject_id = rec.video_id;
    rec.object_id = rec.video_id;
    rec.scene_id = rec.video_id;
    const fs::path meta_path = dir / "meta.json";
    if (fs::exists(meta_path)) {
      std::ifstream meta_in(meta_path);
      json meta;
      try {
        meta_in >> meta;
      } catch (const json::exception& e) {
        throw IoError("build-manifest: " + meta_path.string() + ": " + e.what());
      }
      rec.subject_id = meta.value("subject_id", rec.subject_id);
      rec.object_id = meta.value("object_id", rec.object_id);
      rec.scene_id = meta.value("scene_id", rec.scene_id);
    }

    auto clips = segment_clips(rec, o.clip_len);
    if (clips.empty()) {
      std::cerr << "build-manifest: " << rec.video_id << " has fewer than " << o.clip_len
                << " frames; no clips\n";
      continue;
    }
    for (auto& clip : clips) manifest.clips.push_back(std::move(clip));
    ++videos_used;
  }
  if (manifest.clips.empty()) {
    throw IoError("build-manifest: no clips found under " + o.root);
  }

  // Store paths relative to the manifest location when possible so the
  // directory stays relocatable; loading rebases them.
  const fs::path abs_base = fs::absolute(out_base).lexically_normal();
  auto relativize = [&abs_base](std::vector<std::string>& paths) {
    for (auto& p : paths) {
      const fs::path abs = fs::absolute(fs::path(p)).lexically_normal();
      const fs::path rel = abs.lexically_relative(abs_base);
      p = rel.empty() ? abs.string() : rel.string();
    }
  };
  for (auto& clip : manifest.clips) {
    relativize(clip.exo_frames);
    relativize(clip.ego_frames);
    relativize(clip.exo_layouts);
    relativize(clip.ego_layouts);
  }

  manifest.sort_clips();
  manifest.validate();
  fs::create_directories(abs_base);
  save_manifest(out_path, manifest);
  std::cerr << "build-manifest: " << videos_used << " videos, " << manifest.clips.size()
            << " clips -> " << out_path.string() << "\n";
  std::cout << out_path.string() << "\n";
}

// --- split ------------------------------------------------------------------

struct SplitOpts {
  std::string manifest;
  std::string strategy;
  std::string out_train;
  std::string out_test;
  double train_fraction = 0.8;
  std::string held_out_object;
  std::vector<std::string> train_subjects, test_subjects;
  std::vector<std::string> train_scenes, test_scenes;
};

void cmd_split(const GlobalOpts& global, const SplitOpts& o) {
  const json config = resolve_config(global);
  log_config_hash(config);

  std::string strategy = o.strategy;
  std::replace(strategy.begin(), strategy.end(), '-', '_');
  SplitSpec spec;
  spec.strategy = split_strategy_from_string(strategy);
  spec.train_fraction = o.train_fraction;
  spec.held_out_object = o.held_out_object;
  spec.train_subjects = o.train_subjects;
  spec.test_subjects = o.test_subjects;
  spec.train_scenes = o.train_scenes;
  spec.test_scenes = o.test_scenes;

  const fs::path manifest_path(o.manifest);
  const DatasetManifest manifest = load_manifest(manifest_path);
  const SplitResult result = generate_split(manifest, spec);

  const fs::path base =
      manifest_path.has_parent_path() ? manifest_path.parent_path() : fs::path(".");
  const fs::path train_path = o.out_train.empty() ? base / "train.json" : fs::path(o.out_train);
  const fs::path test_path = o.out_test.empty() ? base / "test.json" : fs::path(o.out_test);
  save_manifest(train_path, result.train);
  save_manifest(test_path, result.test);

  std::cerr << "split: strategy=" << to_string(spec.strategy) << " -> " << train_path.string()
            << ", " << test_path.string() << "\n";
  std::cout << "train=" << result.train.clips.size() << " test=" << result.test.clips.size()
            << "\n";
}

// --- train ------------------------------------------------------------------

struct TrainOpts {
  std::string manifest;
  std::string out;
  std::string stage = "all";
  std::optional<int> steps;
  std::optional<std::uint64_t> seed;
  bool resume = false;
};

void cmd_train(const GlobalOpts& global, const TrainOpts& o) {
  const json config = resolve_config(global);
  PipelineConfig cfg = pipeline_config_from_json(config);
  if (o.steps) {
    cfg.stage1_steps = *o.steps;
    cfg.stage2_steps = *o.steps;
  }
  if (o.seed) cfg.seed = *o.seed;
  cfg.validate();
  log_config_hash(to_json(cfg));

  const bool run_layout = o.stage == "layout" || o.stage == "all";
  const bool run_diffusion = o.stage == "diffusion" || o.stage == "all";

  const fs::path out_dir(o.out);
  fs::create_directories(out_dir);
  const DatasetManifest manifest = load_manifest(o.manifest);
  const auto data = load_frame_pairs(manifest);
  std::cerr << "train: " << data.size() << " frame pairs from " << manifest.clips.size()
            << " clips\n";
  const TrainLogger logger = [](const std::string& line) { std::cerr << line << "\n"; };

  json result;
  if (run_layout) {
    std::vector<FramePair> data1 = data;
    for (auto& pair : data1) {
      pair.exo_frame = resize_square(pair.exo_frame, cfg.translator.height,
                                     cfg.translator.width, "train: translator input");
    }
    TranslatorState state;
    Adam<float> adam;
    const fs::path resume_path = out_dir / "stage1.ckpt";
    if (o.resume && fs::exists(resume_path)) {
      state = load_translator(resume_path, &adam);
      if (adam.size() != state.params.size()) adam.reset(state.params);
      std::cerr << "stage1: resuming from step " << state.step << "\n";
    } else {
      state = init_translator(cfg.translator, mix_seed(cfg.seed, "stage1-init"));
      adam.reset(state.params);
    }
    std::cerr << "stage1: training to step " << cfg.stage1_steps << "\n";
    const auto losses = train_stage1(state, adam, data1, cfg, out_dir, logger);
    result["stage1_checkpoint"] = (out_dir / "stage1.ckpt").string();
    result["stage1_steps"] = state.step;
    if (!losses.empty()) result["stage1_final_loss"] = losses.back();
  }
  if (run_diffusion) {
    const auto codec = make_codec(cfg.codec);
    const int side_h = cfg.denoiser.latent_h * codec->factor();
    const int side_w = cfg.denoiser.latent_w * codec->factor();
    std::vector<FramePair> data2 = data;
    for (auto& pair : data2) {
      pair.exo_frame = resize_square(pair.exo_frame, side_h, side_w, "train: condition input");
      pair.ego_frame = resize_square(pair.ego_frame, side_h, side_w, "train: target frame");
    }
    DenoiserState state;
    NoiseSchedule sched;
    Adam<float> adam;
    const fs::path resume_path = out_dir / "stage2.ckpt";
    if (o.resume && fs::exists(resume_path)) {
      auto loaded = load_denoiser(resume_path, &adam);
      state = std::move(loaded.first);
      sched = std::move(loaded.second);
      if (adam.size() != state.params.size()) adam.reset(state.params);
      std::cerr << "stage2: resuming from step " << state.step << "\n";
    } else {
      state = init_denoiser(cfg.denoiser, mix_seed(cfg.seed, "stage2-init"));
      sched = cfg.make_schedule();
      adam.reset(state.params);
    }
    std::cerr << "stage2: training to step " << cfg.stage2_steps << "\n";
    const auto losses = train_stage2(state, adam, data2, sched, *codec, cfg, out_dir, logger);
    result["stage2_checkpoint"] = (out_dir / "stage2.ckpt").string();
    result["stage2_steps"] = state.step;
    if (!losses.empty()) result["stage2_final_loss"] = losses.back();
  }
  std::cout << result.dump(2) << "\n";
}

// --- infer ------------------------------------------------------------------

struct InferOpts {
  std::string manifest;
  std::string translator_ckpt;
  std::string denoiser_ckpt;
  std::string out;
  std::string video;
  int clip = 0;
  std::optional<std::string> sampler;
  std::optional<std::uint64_t> seed;
};

void cmd_infer(const GlobalOpts& global, const InferOpts& o) {
  const json config = resolve_config(global);
  PipelineConfig cfg = pipeline_config_from_json(config);

  const TranslatorState translator = load_translator(o.translator_ckpt);
  auto loaded = load_denoiser(o.denoiser_ckpt);
  const DenoiserState& denoiser = loaded.first;
  const NoiseSchedule& sched = loaded.second;

  // The checkpoints are authoritative for model shape and schedule; flags
  // and config supply sampler, seed, and codec.
  cfg.translator = translator.config;
  cfg.denoiser = denoiser.config;
  cfg.schedule_kind = sched.kind;
  cfg.schedule_steps = sched.steps;
  cfg.beta_min = sched.beta_min;
  cfg.beta_max = sched.beta_max;
  cfg.cosine_offset = sched.cosine_offset;
  if (o.sampler) cfg.sampler = sampler_kind_from_string(*o.sampler);
  if (o.seed) cfg.seed = *o.seed;
  log_config_hash(to_json(cfg));

  const auto codec = make_codec(cfg.codec);
  const int side_h = cfg.denoiser.latent_h * codec->factor();
  const int side_w = cfg.denoiser.latent_w * codec->factor();
  if (side_h != cfg.translator.height || side_w != cfg.translator.width) {
    throw ConfigError("infer: translator frame size " + std::to_string(cfg.translator.height) +
                      "x" + std::to_string(cfg.translator.width) +
                      " does not match hallucinator frame size " + std::to_string(side_h) + "x" +
                      std::to_string(side_w));
  }

  const DatasetManifest manifest = load_manifest(o.manifest);
  const ClipPair* clip = nullptr;
  if (o.video.empty()) {
    clip = &manifest.clips.front();
  } else {
    for (const auto& c : manifest.clips) {
      if (c.video_id == o.video && c.clip_index == o.clip) {
        clip = &c;
        break;
      }
    }
    if (clip == nullptr) {
      throw InputDomainError("infer: no clip " + o.video + "#" + std::to_string(o.clip) +
                             " in manifest");
    }
  }
  if (clip->exo_layouts.empty()) {
    throw InputDomainError("infer: manifest provides no source-view layouts for clip " +
                           clip->video_id + "#" + std::to_string(clip->clip_index) +
                           "; inference requires them as input");
  }

  std::vector<Frame> exo_frames;
  std::vector<LayoutVariant> exo_layouts;
  for (int i = 0; i < clip->frame_count(); ++i) {
    exo_frames.push_back(resize_square(load_png(clip->exo_frames[static_cast<std::size_t>(i)]),
                                       cfg.translator.height, cfg.translator.width,
                                       "infer: source frame"));
    exo_layouts.push_back(load_layout(clip->exo_layouts[static_cast<std::size_t>(i)]));
  }

  InferOptions opt;
  opt.sampler = cfg.sampler;
  opt.seed = cfg.seed;
  opt.video_id = clip->video_id;
  opt.clip_index = clip->clip_index;
  std::cerr << "infer: clip " << clip->video_id << "#" << clip->clip_index << ", "
            << exo_frames.size() << " frames, sampler=" << to_string(cfg.sampler) << "\n";

  const auto outputs =
      infer_clip(exo_frames, exo_layouts, translator, denoiser, sched, *codec, opt);

  const fs::path out_dir(o.out);
  const fs::path pred_dir = out_dir / "pred";
  fs::create_directories(pred_dir);
  for (std::size_t i = 0; i < outputs.size(); ++i) {
    save_png(pred_dir / frame_name(static_cast<int>(i)), outputs[i]);
  }
  if (!clip->ego_frames.empty()) {
    const fs::path gt_dir = out_dir / "gt";
    fs::create_directories(gt_dir);
    for (std::size_t i = 0; i < clip->ego_frames.size(); ++i) {
      fs::copy_file(clip->ego_frames[i], gt_dir / frame_name(static_cast<int>(i)),
                    fs::copy_options::overwrite_existing);
    }
  }

  json meta = run_metadata(cfg, o.translator_ckpt, o.denoiser_ckpt);
  meta["video_id"] = clip->video_id;
  meta["clip_index"] = clip->clip_index;
  meta["frames"] = outputs.size();
  meta["pred_dir"] = pred_dir.string();
  {
    std::ofstream meta_out(out_dir / "run.json");
    if (!meta_out) throw IoError("infer: cannot write " + (out_dir / "run.json").string());
    meta_out << meta.dump(2) << "\n";
  }
  std::cout << meta.dump(2) << "\n";
}

// --- evaluate ---------------------------------------------------------------

struct EvaluateOpts {
  std::string pred_dir;
  std::string gt_dir;
  std::string report_path;
  std::string dataset;
  std::string split;
  std::string detector = "none";
};

std::unique_ptr<HandDetector> make_detector(const std::string& spec) {
  if (spec == "none") return nullptr;
  if (spec.rfind("constant", 0) == 0) {
    double confidence = 1.0;
    const auto colon = spec.find(':');
    if (colon != std::string::npos) {
      try {
        confidence = std::stod(spec.substr(colon + 1));
      } catch (const std::exception&) {
        throw ConfigError("evaluate: bad detector confidence in '" + spec + "'");
      }
    }
    return std::make_unique<ConstantDetector>(std::vector<double>{confidence});
  }
  throw ConfigError("evaluate: unknown detector '" + spec + "' (expected none or constant[:v])");
}

void cmd_evaluate(const GlobalOpts& global, const EvaluateOpts& o) {
  const json config = resolve_config(global);
  log_config_hash(config);

  const auto pred_paths = png_files_sorted(o.pred_dir);
  const auto gt_paths = png_files_sorted(o.gt_dir);
  if (pred_paths.empty()) throw InputDomainError("evaluate: no PNG frames in " + o.pred_dir);
  if (pred_paths.size() != gt_paths.size()) {
    throw InputDomainError("evaluate: frame count mismatch (" +
                           std::to_string(pred_paths.size()) + " predicted vs " +
                           std::to_string(gt_paths.size()) + " ground truth)");
  }
  std::vector<Frame> preds, gts;
  for (const auto& p : pred_paths) preds.push_back(load_png(p));
  for (const auto& p : gt_paths) gts.push_back(load_png(p));

  // Seeded random-projection features stand in for the pretrained perceptual
  // backbones; names mirror the backbones they substitute for.
  std::vector<std::shared_ptr<FeatureExtractor>> extractors = {
      std::make_shared<RandomProjectionExtractor>("squeeze", 101),
      std::make_shared<RandomProjectionExtractor>("alex", 202),
      std::make_shared<RandomProjectionExtractor>("vgg", 303),
  };
  const auto detector = make_detector(o.detector);
  if (!detector) {
    std::cerr << "evaluate: no hand-detector backend configured; feasibility omitted\n";
  }

  const MetricReport report =
      evaluate(preds, gts, extractors, detector.get(), o.dataset, o.split);

  bool finite = std::isfinite(report.ssim) && std::isfinite(report.psnr) &&
                std::isfinite(report.fid);
  for (const auto& [name, value] : report.perceptual) finite = finite && std::isfinite(value);
  if (report.feasibility) finite = finite && std::isfinite(*report.feasibility);
  if (!finite) {
    throw NumericalError("evaluate: non-finite metric value in report");
  }

  const fs::path report_path =
      o.report_path.empty() ? fs::path(o.pred_dir) / "report.json" : fs::path(o.report_path);
  {
    std::ofstream out(report_path);
    if (!out) throw IoError("evaluate: cannot write " + report_path.string());
    out << report_to_json(report).dump(2) << "\n";
  }
  std::cerr << "evaluate: " << report.frames << " frames -> " << report_path.string() << "\n";
  std::cout << report_table(report);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "crossview: exocentric-to-egocentric clip translation — fixtures, dataset\n"
      "manifests, benchmark splits, two-stage training, inference, and evaluation.\n"
      "Config: JSON file via --config or the CROSSVIEW_CONFIG environment variable,\n"
      "overridden per key with --set key.path=value."};
  app.require_subcommand(1);

  GlobalOpts global;
  app.add_option("--config", global.config_path, "JSON config file")
      ->envname("CROSSVIEW_CONFIG");
  app.add_option("--set", global.overrides,
                 "Override a config field by dotted path, e.g. --set schedule.steps=20");

  MakeFixturesOpts fixtures_opts;
  auto* fixtures_cmd = app.add_subcommand(
      "make-fixtures", "Generate a synthetic paired-view dataset with exact layout labels");
  fixtures_cmd->fallthrough();
  fixtures_cmd->add_option("--out", fixtures_opts.out, "Output directory")->required();
  fixtures_cmd->add_option("--videos", fixtures_opts.videos, "Number of videos");
  fixtures_cmd->add_option("--frames", fixtures_opts.frames, "Frames per video");
  fixtures_cmd->add_option("--size", fixtures_opts.size, "Square frame side in pixels");
  fixtures_cmd->add_option("--clip-len", fixtures_opts.clip_len, "Frames per clip");
  fixtures_cmd->add_option("--noise", fixtures_opts.noise, "Per-pixel Gaussian noise std");
  fixtures_cmd->add_option("--seed", fixtures_opts.seed, "Generator seed");
  fixtures_cmd->callback([&]() { cmd_make_fixtures(global, fixtures_opts); });

  BuildManifestOpts bm_opts;
  auto* bm_cmd = app.add_subcommand(
      "build-manifest",
      "Index a directory of videos (<root>/<video>/{exo,ego}_NNN.png [+ _NNN.json layouts, "
      "meta.json]) into a clip manifest");
  bm_cmd->fallthrough();
  bm_cmd->add_option("root", bm_opts.root, "Dataset root directory")->required();
  bm_cmd->add_option("--out", bm_opts.out, "Manifest path (default <root>/manifest.json)");
  bm_cmd->add_option("--dataset", bm_opts.dataset, "Dataset name (default root dir name)");
  bm_cmd->add_option("--clip-len", bm_opts.clip_len, "Frames per clip (default 30)");
  bm_cmd->callback([&]() { cmd_build_manifest(global, bm_opts); });

  SplitOpts split_opts;
  auto* split_cmd =
      app.add_subcommand("split", "Partition a manifest into train/test by a hold-out strategy");
  split_cmd->fallthrough();
  split_cmd->add_option("manifest", split_opts.manifest, "Manifest file")->required();
  split_cmd
      ->add_option("--strategy", split_opts.strategy,
                   "new_actions | new_objects | new_subjects | new_scenes")
      ->required();
  split_cmd->add_option("--out-train", split_opts.out_train,
                        "Train manifest path (default <manifest dir>/train.json)");
  split_cmd->add_option("--out-test", split_opts.out_test,
                        "Test manifest path (default <manifest dir>/test.json)");
  split_cmd->add_option("--train-fraction", split_opts.train_fraction,
                        "new_actions: leading fraction of each video's clips (default 0.8)");
  split_cmd->add_option("--held-out-object", split_opts.held_out_object,
                        "new_objects: object id whose clips form the test set");
  split_cmd->add_option("--train-subjects", split_opts.train_subjects,
                        "new_subjects: subject ids for train");
  split_cmd->add_option("--test-subjects", split_opts.test_subjects,
                        "new_subjects: subject ids for test");
  split_cmd->add_option("--train-scenes", split_opts.train_scenes,
                        "new_scenes: scene ids for train");
  split_cmd->add_option("--test-scenes", split_opts.test_scenes,
                        "new_scenes: scene ids for test");
  split_cmd->callback([&]() { cmd_split(global, split_opts); });

  TrainOpts train_opts;
  auto* train_cmd =
      app.add_subcommand("train", "Train the layout translator and/or the pixel hallucinator");
  train_cmd->fallthrough();
  train_cmd->add_option("manifest", train_opts.manifest, "Training manifest")->required();
  train_cmd->add_option("--out", train_opts.out, "Run directory for checkpoints")->required();
  train_cmd->add_option("--stage", train_opts.stage, "layout | diffusion | all (default all)")
      ->check(CLI::IsMember({"layout", "diffusion", "all"}));
  train_cmd->add_option("--steps", train_opts.steps,
                        "Step budget for the selected stage(s); overrides config");
  train_cmd->add_option("--seed", train_opts.seed, "Global seed; overrides config");
  train_cmd->add_flag("--resume", train_opts.resume,
                      "Continue from <out>/stage{1,2}.ckpt when present");
  train_cmd->callback([&]() { cmd_train(global, train_opts); });

  InferOpts infer_opts;
  auto* infer_cmd = app.add_subcommand(
      "infer", "Translate one clip's source-view frames into target-view frames");
  infer_cmd->fallthrough();
  infer_cmd->add_option("manifest", infer_opts.manifest,
                        "Manifest with source frames and source layouts")
      ->required();
  infer_cmd->add_option("--translator", infer_opts.translator_ckpt, "Stage-1 checkpoint")
      ->required();
  infer_cmd->add_option("--denoiser", infer_opts.denoiser_ckpt, "Stage-2 checkpoint")
      ->required();
  infer_cmd->add_option("--out", infer_opts.out, "Output directory")->required();
  infer_cmd->add_option("--video", infer_opts.video,
                        "Video id (default: first clip in the manifest)");
  infer_cmd->add_option("--clip", infer_opts.clip, "Clip index within --video (default 0)");
  infer_cmd->add_option("--sampler", infer_opts.sampler, "deterministic | ancestral");
  infer_cmd->add_option("--seed", infer_opts.seed, "Global seed; overrides config");
  infer_cmd->callback([&]() { cmd_infer(global, infer_opts); });

  EvaluateOpts eval_opts;
  auto* eval_cmd = app.add_subcommand(
      "evaluate", "Score predicted frames against ground truth and write report.json");
  eval_cmd->fallthrough();
  eval_cmd->add_option("pred", eval_opts.pred_dir, "Directory of predicted PNG frames")
      ->required();
  eval_cmd->add_option("gt", eval_opts.gt_dir, "Directory of ground-truth PNG frames")
      ->required();
  eval_cmd->add_option("--report", eval_opts.report_path,
                       "Report path (default <pred>/report.json)");
  eval_cmd->add_option("--dataset", eval_opts.dataset, "Dataset label for the report");
  eval_cmd->add_option("--split", eval_opts.split, "Split label for the report");
  eval_cmd->add_option("--detector", eval_opts.detector,
                       "Hand-detector backend: none (default) or constant[:confidence]");
  eval_cmd->callback([&]() { cmd_evaluate(global, eval_opts); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    std::cerr << "run with --help for usage\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
