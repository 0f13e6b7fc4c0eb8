#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "crossview/core/errors.hpp"
#include "crossview/core/rng.hpp"
#include "crossview/core/tensor3.hpp"
#include "crossview/diffusion/codec.hpp"
#include "crossview/diffusion/schedule.hpp"
#include "crossview/nn/adam.hpp"
#include "crossview/nn/blocks.hpp"
#include "crossview/nn/checkpoint.hpp"
#include "crossview/nn/graph.hpp"
#include "crossview/nn/params.hpp"

namespace crossview {

// Transformer denoiser over patch tokens of the channel-concatenated
// (noisy latent, condition) input, with a learned projection of the sinusoidal
// timestep embedding broadcast onto every token. Predicts the clean latent
// (sample prediction).
struct DenoiserConfig {
  int latent_h = 32;
  int latent_w = 32;
  int latent_c = 3;
  int cond_c = 6;     // condition channels (2 codec streams of latent_c by default)
  int patch = 2;
  int width = 64;     // token dim
  int blocks = 4;
  int heads = 4;
  int mlp_ratio = 4;
  int temb_width = 64;  // sinusoidal embedding width (even)

  int tokens() const { return (latent_h / patch) * (latent_w / patch); }
  int in_patch_dim() const { return patch * patch * (latent_c + cond_c); }
  int out_patch_dim() const { return patch * patch * latent_c; }

  void validate() const {
    if (latent_h < 1 || latent_w < 1 || latent_c < 1) throw ConfigError("denoiser: bad latent dims");
    if (patch < 1 || latent_h % patch != 0 || latent_w % patch != 0) {
      throw ConfigError("denoiser: latent dims must be divisible by patch size");
    }
    if (cond_c < 0) throw ConfigError("denoiser: negative condition channels");
    if (width < 1 || heads < 1 || width % heads != 0) {
      throw ConfigError("denoiser: width must divide into heads");
    }
    if (blocks < 0) throw ConfigError("denoiser: negative depth");
    if (mlp_ratio < 1) throw ConfigError("denoiser: mlp_ratio must be >= 1");
    if (temb_width < 2 || temb_width % 2 != 0) throw ConfigError("denoiser: temb_width must be even");
  }
};

inline nlohmann::json to_json(const DenoiserConfig& c) {
  return nlohmann::json{{"latent_h", c.latent_h}, {"latent_w", c.latent_w},
                        {"latent_c", c.latent_c}, {"cond_c", c.cond_c},
                        {"patch", c.patch},       {"width", c.width},
                        {"blocks", c.blocks},     {"heads", c.heads},
                        {"mlp_ratio", c.mlp_ratio}, {"temb_width", c.temb_width}};
}

inline DenoiserConfig denoiser_config_from_json(const nlohmann::json& j) {
  DenoiserConfig c;
  c.latent_h = j.value("latent_h", c.latent_h);
  c.latent_w = j.value("latent_w", c.latent_w);
  c.latent_c = j.value("latent_c", c.latent_c);
  c.cond_c = j.value("cond_c", c.cond_c);
  c.patch = j.value("patch", c.patch);
  c.width = j.value("width", c.width);
  c.blocks = j.value("blocks", c.blocks);
  c.heads = j.value("heads", c.heads);
  c.mlp_ratio = j.value("mlp_ratio", c.mlp_ratio);
  c.temb_width = j.value("temb_width", c.temb_width);
  c.validate();
  return c;
}

struct DenoiserState {
  DenoiserConfig config;
  Params<float> params;
  std::uint64_t step = 0;
};

// Forward build: returns the M×(P²·latent_c) patch-space prediction node.
template <typename S>
inline int build_denoise(ParamBinder<S>& b, const DenoiserConfig& cfg, const Latent& z_n,
                         const Latent& cond, int n) {
  if (z_n.h != cfg.latent_h || z_n.w != cfg.latent_w || z_n.c != cfg.latent_c) {
    throw InputDomainError("denoise: latent is " + z_n.shape_str() + ", config wants " +
                           std::to_string(cfg.latent_h) + "x" + std::to_string(cfg.latent_w) +
                           "x" + std::to_string(cfg.latent_c));
  }
  if (cond.h != cfg.latent_h || cond.w != cfg.latent_w || cond.c != cfg.cond_c) {
    throw InputDomainError("denoise: condition is " + cond.shape_str() + ", config wants " +
                           std::to_string(cfg.cond_c) + " channels at latent dims");
  }
  auto& g = b.graph();
  const Latent joined = concat_channels(z_n, cond);
  const int x = g.leaf(patch_matrix<S>(joined, cfg.patch));
  int tokens = g.add(linear(b, "embed", x, cfg.in_patch_dim(), cfg.width),
                     b.param("pos", cfg.tokens(), cfg.width, ParamInit::normal002));
  tokens = g.add_rowvec(tokens, timestep_embed(b, "temb", n, cfg.temb_width, cfg.width));
  for (int i = 0; i < cfg.blocks; ++i) {
    tokens = encoder_block(b, "blk." + std::to_string(i), tokens, cfg.width, cfg.heads,
                           cfg.mlp_ratio);
  }
  tokens = layernorm(b, "out_ln", tokens, cfg.width);
  return linear(b, "head", tokens, cfg.width, cfg.out_patch_dim());
}

inline DenoiserState init_denoiser(const DenoiserConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  DenoiserState state;
  state.config = cfg;
  Rng rng(mix_seed(seed, "denoiser-init"));
  Graph<float> g;
  ParamBinder<float> binder(g, state.params, rng);
  const Latent z(cfg.latent_h, cfg.latent_w, cfg.latent_c);
  const Latent d(cfg.latent_h, cfg.latent_w, cfg.cond_c);
  build_denoise(binder, cfg, z, d, /*n=*/1);
  return state;
}

// Predicted clean latent ẑ for a noisy latent at step n under condition d.
inline Latent denoise_predict(const DenoiserState& state, const Latent& z_n, const Latent& cond,
                              int n) {
  Graph<float> g;
  ParamBinder<float> binder(g, state.params);
  const int pred = build_denoise(binder, state.config, z_n, cond, n);
  return unpatch_matrix(g.value(pred), state.config.latent_h, state.config.latent_w,
                        state.config.latent_c, state.config.patch);
}

// Pluggable predictor seam shared with the sampler: (z_n, d, n) -> ẑ.
using DenoisePredictor = std::function<Latent(const Latent&, const Latent&, int)>;

inline DenoisePredictor predictor_from_state(const DenoiserState& state) {
  return [&state](const Latent& z_n, const Latent& cond, int n) {
    return denoise_predict(state, z_n, cond, n);
  };
}

// Mean squared error between the clean latent and the predictor's output on
// the diffused input: ‖z − ẑ(α^n z + σ^n ε, d)‖² / #elements.
inline double diffusion_loss(const Latent& z, const Latent& cond, int n, const Latent& eps,
                             const NoiseSchedule& sched, const DenoisePredictor& predictor) {
  const Latent z_n = forward_diffuse(z, n, eps, sched);
  const Latent pred = predictor(z_n, cond, n);
  require_same_shape(z, pred, "diffusion_loss");
  const double loss = mean_sq_diff(z, pred);
  if (!std::isfinite(loss)) throw TrainingError("diffusion_loss: non-finite loss");
  return loss;
}

inline double diffusion_loss(const Latent& z, const Latent& cond, int n, const Latent& eps,
                             const NoiseSchedule& sched, const DenoiserState& state) {
  return diffusion_loss(z, cond, n, eps, sched, predictor_from_state(state));
}

// --- training --------------------------------------------------------------

struct DiffusionExample {
  Latent z;      // codec-encoded target (ego) frame
  Latent cond;   // build_condition output
};

struct DiffusionStepResult {
  double loss = 0.0;
  double grad_norm = 0.0;
};

// Builds the differentiable loss for one example at sampled (n, eps):
// mean squared error in patch space, which equals the latent-space mean since
// patching is an element bijection.
template <typename S>
inline int build_diffusion_loss(ParamBinder<S>& b, const DenoiserConfig& cfg,
                                const DiffusionExample& example, int n, const Latent& eps,
                                const NoiseSchedule& sched) {
  auto& g = b.graph();
  const Latent z_n = forward_diffuse(example.z, n, eps, sched);
  const int pred = build_denoise(b, cfg, z_n, example.cond, n);
  const int target = g.leaf(patch_matrix<S>(example.z, cfg.patch));
  return g.mse(pred, target);
}

// One optimizer step: per example, draw n ~ Uniform[1, N] and ε ~ N(0, I)
// from the provided rng, accumulate gradients of the mean batch loss, clip,
// and apply Adam.
inline DiffusionStepResult train_step_diffusion(DenoiserState& state, Adam<float>& adam,
                                                const std::vector<DiffusionExample>& batch,
                                                const NoiseSchedule& sched, Rng& rng,
                                                const AdamConfig& optim) {
  if (batch.empty()) throw InputDomainError("train_step_diffusion: empty batch");
  auto grads = make_grad_accumulator(state.params);
  double loss_total = 0.0;
  for (const auto& example : batch) {
    const int n = 1 + static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(sched.steps)));
    Latent eps(example.z.h, example.z.w, example.z.c);
    for (auto& v : eps.data) v = static_cast<float>(rng.normal());
    Graph<float> g;
    ParamBinder<float> binder(g, state.params);
    const int loss_node = build_diffusion_loss(binder, state.config, example, n, eps, sched);
    loss_total += static_cast<double>(g.value_scalar(loss_node));
    g.backward(loss_node);
    binder.add_grads_to(grads);
  }
  const double loss = loss_total / static_cast<double>(batch.size());
  if (!std::isfinite(loss)) {
    throw TrainingError("train_step_diffusion: non-finite loss at step " +
                        std::to_string(state.step));
  }
  const float inv_b = 1.0f / static_cast<float>(batch.size());
  for (auto& grad : grads) grad *= inv_b;
  DiffusionStepResult result;
  result.loss = loss;
  result.grad_norm = clip_global_norm(grads, /*clip_norm=*/-1.0);
  adam.step(state.params, grads, optim);
  ++state.step;
  return result;
}

// --- persistence -----------------------------------------------------------

inline void save_denoiser(const std::filesystem::path& path, const DenoiserState& state,
                          const NoiseSchedule& sched, const Adam<float>* adam = nullptr) {
  nlohmann::json config;
  config["kind"] = "denoiser";
  config["model"] = to_json(state.config);
  config["schedule"] = to_json(sched);
  save_checkpoint(path, make_checkpoint(state.params, adam, std::move(config), state.step));
}

inline std::pair<DenoiserState, NoiseSchedule> load_denoiser(const std::filesystem::path& path,
                                                             Adam<float>* adam = nullptr) {
  const Checkpoint ckpt = load_checkpoint(path);
  if (ckpt.config.value("kind", "") != std::string("denoiser")) {
    throw IoError("load_denoiser: " + path.string() + " is not a denoiser checkpoint");
  }
  DenoiserState state = init_denoiser(denoiser_config_from_json(ckpt.config.at("model")),
                                      /*seed=*/0);
  state.step = ckpt.step;
  restore_from_checkpoint(ckpt, state.params, adam);
  return {std::move(state), schedule_from_json(ckpt.config.at("schedule"))};
}

}  // namespace crossview
