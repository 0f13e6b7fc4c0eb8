#pragma once

#include <algorithm>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <json.hpp>

#include "crossview/core/errors.hpp"
#include "crossview/core/rng.hpp"
#include "crossview/core/tensor3.hpp"
#include "crossview/data/layout.hpp"
#include "crossview/data/layout_io.hpp"
#include "crossview/data/manifest.hpp"
#include "crossview/diffusion/codec.hpp"
#include "crossview/diffusion/denoiser.hpp"
#include "crossview/diffusion/sampler.hpp"
#include "crossview/diffusion/schedule.hpp"
#include "crossview/io/png_io.hpp"
#include "crossview/nn/adam.hpp"
#include "crossview/translator/model.hpp"

namespace crossview {

// Two-stage orchestration: the layout translator and the pixel hallucinator
// are trained separately on the same manifest, then chained per frame at
// inference (predict layout -> render -> condition -> sample -> decode).
struct PipelineConfig {
  TranslatorConfig translator;
  DenoiserConfig denoiser;
  std::string codec = "identity";
  ScheduleKind schedule_kind = ScheduleKind::linear_beta;
  int schedule_steps = 50;
  double beta_min = 2e-3;
  double beta_max = 0.4;
  double cosine_offset = 0.008;
  SamplerKind sampler = SamplerKind::deterministic;
  int stage1_steps = 2000;
  int stage2_steps = 2000;
  int batch_size = 4;
  AdamConfig stage1_optim{};
  AdamConfig stage2_optim{};
  std::uint64_t seed = 0;
  int checkpoint_every = 500;
  int keep_checkpoints = 3;
  int log_every = 50;

  NoiseSchedule make_schedule() const {
    return build_schedule(schedule_kind, schedule_steps, beta_min, beta_max, cosine_offset);
  }

  void validate() const {
    translator.validate();
    denoiser.validate();
    if (stage1_steps < 0 || stage2_steps < 0) throw ConfigError("pipeline: negative step budget");
    if (batch_size < 1) throw ConfigError("pipeline: batch_size must be >= 1");
    if (checkpoint_every < 1 || keep_checkpoints < 1 || log_every < 1) {
      throw ConfigError("pipeline: cadence fields must be >= 1");
    }
  }
};

inline nlohmann::json to_json(const PipelineConfig& c) {
  nlohmann::json j;
  j["translator"] = to_json(c.translator);
  j["denoiser"] = to_json(c.denoiser);
  j["codec"] = c.codec;
  j["schedule"] = {{"kind", to_string(c.schedule_kind)},
                   {"steps", c.schedule_steps},
                   {"beta_min", c.beta_min},
                   {"beta_max", c.beta_max},
                   {"cosine_offset", c.cosine_offset}};
  j["sampler"] = to_string(c.sampler);
  j["stage1_steps"] = c.stage1_steps;
  j["stage2_steps"] = c.stage2_steps;
  j["batch_size"] = c.batch_size;
  j["stage1_lr"] = c.stage1_optim.lr;
  j["stage2_lr"] = c.stage2_optim.lr;
  j["clip_norm"] = c.stage1_optim.clip_norm;
  j["seed"] = c.seed;
  j["checkpoint_every"] = c.checkpoint_every;
  j["keep_checkpoints"] = c.keep_checkpoints;
  j["log_every"] = c.log_every;
  return j;
}

inline PipelineConfig pipeline_config_from_json(const nlohmann::json& j) {
  PipelineConfig c;
  if (j.contains("translator")) c.translator = translator_config_from_json(j.at("translator"));
  if (j.contains("denoiser")) c.denoiser = denoiser_config_from_json(j.at("denoiser"));
  c.codec = j.value("codec", c.codec);
  if (j.contains("schedule")) {
    const auto& s = j.at("schedule");
    if (s.contains("kind")) c.schedule_kind = schedule_kind_from_string(s.at("kind"));
    c.schedule_steps = s.value("steps", c.schedule_steps);
    c.beta_min = s.value("beta_min", c.beta_min);
    c.beta_max = s.value("beta_max", c.beta_max);
    c.cosine_offset = s.value("cosine_offset", c.cosine_offset);
  }
  if (j.contains("sampler")) c.sampler = sampler_kind_from_string(j.at("sampler"));
  c.stage1_steps = j.value("stage1_steps", c.stage1_steps);
  c.stage2_steps = j.value("stage2_steps", c.stage2_steps);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.stage1_optim.lr = j.value("stage1_lr", c.stage1_optim.lr);
  c.stage2_optim.lr = j.value("stage2_lr", c.stage2_optim.lr);
  c.stage1_optim.clip_norm = j.value("clip_norm", c.stage1_optim.clip_norm);
  c.stage2_optim.clip_norm = j.value("clip_norm", c.stage2_optim.clip_norm);
  c.seed = j.value("seed", c.seed);
  c.checkpoint_every = j.value("checkpoint_every", c.checkpoint_every);
  c.keep_checkpoints = j.value("keep_checkpoints", c.keep_checkpoints);
  c.log_every = j.value("log_every", c.log_every);
  c.validate();
  return c;
}

// --- dataset loading --------------------------------------------------------

struct FramePair {
  std::string video_id;
  int clip_index = 0;
  int frame_index = 0;
  Frame exo_frame;
  Frame ego_frame;
  LayoutVariant exo_layout;
  LayoutVariant ego_layout;
};

// Loads every frame of every clip with its layouts; aborts naming the
// offending clip on failure.
inline std::vector<FramePair> load_frame_pairs(const DatasetManifest& manifest) {
  std::vector<FramePair> pairs;
  for (const auto& clip : manifest.clips) {
    if (clip.exo_layouts.empty() || clip.ego_layouts.empty()) {
      throw IoError("training requires layouts for clip " + clip.video_id + "#" +
                    std::to_string(clip.clip_index));
    }
    try {
      for (int i = 0; i < clip.frame_count(); ++i) {
        FramePair pair;
        pair.video_id = clip.video_id;
        pair.clip_index = clip.clip_index;
        pair.frame_index = i;
        pair.exo_frame = load_png(clip.exo_frames[static_cast<std::size_t>(i)]);
        pair.ego_frame = load_png(clip.ego_frames[static_cast<std::size_t>(i)]);
        pair.exo_layout = load_layout(clip.exo_layouts[static_cast<std::size_t>(i)]);
        pair.ego_layout = load_layout(clip.ego_layouts[static_cast<std::size_t>(i)]);
        pairs.push_back(std::move(pair));
      }
    } catch (const std::exception& e) {
      throw IoError("failed loading clip " + clip.video_id + "#" +
                    std::to_string(clip.clip_index) + ": " + e.what());
    }
  }
  if (pairs.empty()) throw IoError("manifest contains no frames");
  return pairs;
}

inline Frame render_layout_sized(const LayoutVariant& layout, int h, int w) {
  if (const auto* pose = std::get_if<PoseLayout>(&layout)) {
    return render_pose_layout(*pose, h, w);
  }
  return render_mask_layout(std::get<MaskLayout>(layout));
}

// --- training --------------------------------------------------------------

using TrainLogger = std::function<void(const std::string&)>;

namespace detail {

// Rolling checkpoint writer: keeps the most recent `keep` periodic files.
class CheckpointRotation {
 public:
  CheckpointRotation(std::filesystem::path dir, std::string stem, int keep)
      : dir_(std::move(dir)), stem_(std::move(stem)), keep_(keep) {}

  std::filesystem::path next_path(std::uint64_t step) {
    return dir_ / (stem_ + "_step" + std::to_string(step) + ".ckpt");
  }

  void wrote(const std::filesystem::path& path) {
    written_.push_back(path);
    while (static_cast<int>(written_.size()) > keep_) {
      std::error_code ec;
      std::filesystem::remove(written_.front(), ec);
      written_.pop_front();
    }
  }

 private:
  std::filesystem::path dir_;
  std::string stem_;
  int keep_;
  std::deque<std::filesystem::path> written_;
};

inline void log_line(const TrainLogger& log, std::uint64_t step, double loss) {
  if (log) log("step=" + std::to_string(step) + " loss=" + std::to_string(loss));
}

}  // namespace detail

// Recovers the query→joint output order the matched loss settled on (see
// QueryOrderVotes) and stores it on the state, replacing any previous
// calibration. Runs over the full training set; deterministic given
// (parameters, data).
inline void calibrate_query_order(TranslatorState& state,
                                  const std::vector<LayoutExample>& examples) {
  state.query_order.clear();
  QueryOrderVotes votes(state.config.queries);
  for (const auto& ex : examples) {
    const auto* target = std::get_if<PoseLayout>(&ex.target);
    if (target == nullptr) continue;
    votes.add(decode_pose(state, ex.source_frame, ex.source_layout), *target);
  }
  state.query_order = votes.resolve();
}

// Stage 1: layout-translator training. Per-step RNG streams are derived from
// (seed, step), so a run resumed from any checkpoint retraces the original
// batch draws and loss curve exactly. Returns one loss value per executed
// step.
inline std::vector<double> train_stage1(TranslatorState& state, Adam<float>& adam,
                                        const std::vector<FramePair>& data,
                                        const PipelineConfig& cfg,
                                        const std::filesystem::path& out_dir,
                                        const TrainLogger& log = {}) {
  std::vector<LayoutExample> examples;
  examples.reserve(data.size());
  for (const auto& pair : data) {
    LayoutExample ex;
    ex.source_frame = pair.exo_frame;
    ex.source_layout = render_layout_sized(pair.exo_layout, pair.exo_frame.h, pair.exo_frame.w);
    ex.target = pair.ego_layout;
    examples.push_back(std::move(ex));
  }
  const std::uint64_t stage_seed = mix_seed(cfg.seed, "stage1");
  detail::CheckpointRotation rotation(out_dir, "stage1", cfg.keep_checkpoints);
  std::vector<double> losses;
  while (state.step < static_cast<std::uint64_t>(cfg.stage1_steps)) {
    Rng rng(mix_seed(stage_seed, state.step));
    std::vector<LayoutExample> batch;
    for (int b = 0; b < cfg.batch_size; ++b) {
      batch.push_back(examples[rng.uniform_index(examples.size())]);
    }
    const auto result = train_step_layout(state, adam, batch, cfg.stage1_optim);
    losses.push_back(result.loss);
    if (state.step % static_cast<std::uint64_t>(cfg.log_every) == 0 ||
        state.step == static_cast<std::uint64_t>(cfg.stage1_steps)) {
      detail::log_line(log, state.step, result.loss);
    }
    if (state.step % static_cast<std::uint64_t>(cfg.checkpoint_every) == 0 &&
        state.step < static_cast<std::uint64_t>(cfg.stage1_steps)) {
      const auto path = rotation.next_path(state.step);
      save_translator(path, state, &adam);
      rotation.wrote(path);
    }
  }
  if (state.config.mode == LayoutMode::pose) calibrate_query_order(state, examples);
  save_translator(out_dir / "stage1.ckpt", state, &adam);
  return losses;
}

// Stage 2: conditional-diffusion training over codec-encoded pairs.
inline std::vector<double> train_stage2(DenoiserState& state, Adam<float>& adam,
                                        const std::vector<FramePair>& data,
                                        const NoiseSchedule& sched, const LatentCodec& codec,
                                        const PipelineConfig& cfg,
                                        const std::filesystem::path& out_dir,
                                        const TrainLogger& log = {}) {
  std::vector<DiffusionExample> examples;
  examples.reserve(data.size());
  for (const auto& pair : data) {
    DiffusionExample ex;
    ex.z = codec.encode(pair.ego_frame);
    ex.cond = build_condition(codec, pair.exo_frame,
                              render_layout_sized(pair.ego_layout, pair.ego_frame.h,
                                                  pair.ego_frame.w));
    examples.push_back(std::move(ex));
  }
  const std::uint64_t stage_seed = mix_seed(cfg.seed, "stage2");
  detail::CheckpointRotation rotation(out_dir, "stage2", cfg.keep_checkpoints);
  std::vector<double> losses;
  while (state.step < static_cast<std::uint64_t>(cfg.stage2_steps)) {
    Rng rng(mix_seed(stage_seed, state.step));
    std::vector<DiffusionExample> batch;
    for (int b = 0; b < cfg.batch_size; ++b) {
      batch.push_back(examples[rng.uniform_index(examples.size())]);
    }
    const auto result = train_step_diffusion(state, adam, batch, sched, rng, cfg.stage2_optim);
    losses.push_back(result.loss);
    if (state.step % static_cast<std::uint64_t>(cfg.log_every) == 0 ||
        state.step == static_cast<std::uint64_t>(cfg.stage2_steps)) {
      detail::log_line(log, state.step, result.loss);
    }
    if (state.step % static_cast<std::uint64_t>(cfg.checkpoint_every) == 0 &&
        state.step < static_cast<std::uint64_t>(cfg.stage2_steps)) {
      const auto path = rotation.next_path(state.step);
      save_denoiser(path, state, sched, &adam);
      rotation.wrote(path);
    }
  }
  save_denoiser(out_dir / "stage2.ckpt", state, sched, &adam);
  return losses;
}

struct TrainedStates {
  TranslatorState translator;
  DenoiserState denoiser;
  NoiseSchedule schedule;
};

// Full two-stage run from scratch; final checkpoints land at
// out_dir/stage1.ckpt and out_dir/stage2.ckpt.
inline TrainedStates train_all(const DatasetManifest& manifest, const PipelineConfig& cfg,
                               const std::filesystem::path& out_dir, const TrainLogger& log = {}) {
  cfg.validate();
  std::filesystem::create_directories(out_dir);
  const auto data = load_frame_pairs(manifest);
  TrainedStates out{init_translator(cfg.translator, mix_seed(cfg.seed, "stage1-init")),
                    init_denoiser(cfg.denoiser, mix_seed(cfg.seed, "stage2-init")),
                    cfg.make_schedule()};
  Adam<float> adam1(out.translator.params);
  if (log) log("stage1: " + std::to_string(cfg.stage1_steps) + " steps, " +
               std::to_string(data.size()) + " frame pairs");
  train_stage1(out.translator, adam1, data, cfg, out_dir, log);
  const auto codec = make_codec(cfg.codec);
  Adam<float> adam2(out.denoiser.params);
  if (log) log("stage2: " + std::to_string(cfg.stage2_steps) + " steps");
  train_stage2(out.denoiser, adam2, data, out.schedule, *codec, cfg, out_dir, log);
  return out;
}

// --- inference -------------------------------------------------------------

struct InferOptions {
  SamplerKind sampler = SamplerKind::deterministic;
  std::uint64_t seed = 0;
  std::string video_id;   // folded into per-frame seeds
  int clip_index = 0;
  // Optional explicit per-frame seeds (size = frame count); overrides the
  // (seed, video, clip, frame-index) derivation.
  std::vector<std::uint64_t> frame_seeds;
};

inline std::uint64_t frame_seed(const InferOptions& opt, int frame_index) {
  if (!opt.frame_seeds.empty()) {
    return opt.frame_seeds[static_cast<std::size_t>(frame_index)];
  }
  return mix_seed(mix_seed(mix_seed(opt.seed, fnv1a(opt.video_id)),
                           static_cast<std::uint64_t>(opt.clip_index)),
                  static_cast<std::uint64_t>(frame_index));
}

// Chained per-frame inference. Ego ground truth is absent by signature: each
// output frame is produced from the exo frame and exo layout alone.
inline std::vector<Frame> infer_clip(const std::vector<Frame>& exo_frames,
                                     const std::vector<LayoutVariant>& exo_layouts,
                                     const TranslatorState& translator,
                                     const DenoiserState& denoiser, const NoiseSchedule& sched,
                                     const LatentCodec& codec, const InferOptions& opt) {
  if (exo_frames.size() != exo_layouts.size()) {
    throw InputDomainError("infer_clip: frame/layout counts disagree");
  }
  if (!opt.frame_seeds.empty() && opt.frame_seeds.size() != exo_frames.size()) {
    throw InputDomainError("infer_clip: frame_seeds length must match frame count");
  }
  std::vector<Frame> outputs;
  outputs.reserve(exo_frames.size());
  const auto predictor = predictor_from_state(denoiser);
  for (std::size_t i = 0; i < exo_frames.size(); ++i) {
    try {
      const Frame& exo = exo_frames[i];
      const Frame exo_render = render_layout_sized(exo_layouts[i], exo.h, exo.w);
      Frame ego_render;
      if (translator.config.mode == LayoutMode::pose) {
        const Mat<double> pred = decode_pose(translator, exo, exo_render);
        const PoseLayout ego_layout = pose_from_predictions(pred, kJointsPerHand);
        ego_render = render_pose_layout(ego_layout, translator.config.height,
                                        translator.config.width);
      } else {
        const Tensor3 probs = decode_mask(translator, exo, exo_render);
        MaskLayout ego_mask;
        ego_mask.h = probs.h;
        ego_mask.w = probs.w;
        ego_mask.mask.resize(static_cast<std::size_t>(probs.h) * probs.w);
        for (int y = 0; y < probs.h; ++y) {
          for (int x = 0; x < probs.w; ++x) {
            ego_mask.at(y, x) = probs.at(y, x, 1) > probs.at(y, x, 0) ? 1 : 0;
          }
        }
        ego_render = render_mask_layout(ego_mask);
      }
      const Latent cond = build_condition(codec, exo, ego_render);
      const Latent z0 = sample(cond, sched, predictor, denoiser.config.latent_c,
                               frame_seed(opt, static_cast<int>(i)), opt.sampler);
      Frame out = codec.decode(z0);
      for (auto& v : out.data) v = std::clamp(v, 0.0f, 1.0f);
      outputs.push_back(std::move(out));
    } catch (const std::exception& e) {
      throw InputDomainError("infer_clip: frame " + std::to_string(i) + ": " + e.what());
    }
  }
  return outputs;
}

// Run-metadata record written next to inference outputs: enough to identify
// the exact configuration and model bytes that produced them.
inline nlohmann::json run_metadata(const PipelineConfig& cfg,
                                   const std::filesystem::path& translator_ckpt,
                                   const std::filesystem::path& denoiser_ckpt) {
  nlohmann::json meta;
  const std::string config_dump = to_json(cfg).dump();
  meta["config_hash"] = fnv1a(config_dump);
  meta["seed"] = cfg.seed;
  meta["sampler"] = to_string(cfg.sampler);
  meta["checkpoints"] = {{"translator", {{"path", translator_ckpt.string()},
                                         {"hash", hash_file(translator_ckpt)}}},
                         {"denoiser", {{"path", denoiser_ckpt.string()},
                                       {"hash", hash_file(denoiser_ckpt)}}}};
  return meta;
}

}  // namespace crossview
