#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "crossview/core/errors.hpp"
#include "crossview/core/rng.hpp"
#include "crossview/core/tensor3.hpp"
#include "crossview/data/layout.hpp"
#include "crossview/nn/adam.hpp"
#include "crossview/nn/blocks.hpp"
#include "crossview/nn/checkpoint.hpp"
#include "crossview/nn/graph.hpp"
#include "crossview/nn/params.hpp"
#include "crossview/translator/config.hpp"
#include "crossview/translator/matching.hpp"

namespace crossview {

struct TranslatorState {
  TranslatorConfig config;
  Params<float> params;
  std::uint64_t step = 0;
  // Query-output ordering, calibrated after training (see QueryOrderVotes):
  // row g of an ordered prediction is raw query row query_order[g]. The
  // bipartite training loss is order-free, so the head settles on an
  // arbitrary but frame-consistent query→joint permutation; downstream
  // consumers that rebuild a structured pose need it resolved. Empty means
  // identity (uncalibrated).
  std::vector<int> query_order;
};

inline void require_same_shape_spatial(const Tensor3& a, const Tensor3& b) {
  if (a.h != b.h || a.w != b.w) {
    throw InputDomainError("expected matching spatial dims, got " + a.shape_str() + " vs " +
                           b.shape_str());
  }
}

// --- forward-graph builders -------------------------------------------------
// Each builder works with either a create-mode binder (materializing
// parameters) or a bind-mode binder (training/inference), so the forward pass
// itself defines the parameter set.

// Patch-embeds the channel-concatenated (frame, layout render) pair and adds
// the learned position embedding. Returns the M×D token node.
template <typename S>
inline int build_patchify(ParamBinder<S>& b, const TranslatorConfig& cfg, const Frame& frame,
                          const Frame& layout_render) {
  if (frame.h != cfg.height || frame.w != cfg.width) {
    throw InputDomainError("patchify: frame is " + frame.shape_str() + ", config wants " +
                           std::to_string(cfg.height) + "x" + std::to_string(cfg.width));
  }
  require_same_shape_spatial(frame, layout_render);
  const Frame joined = concat_channels(frame, layout_render);
  if (joined.c != cfg.input_channels) {
    throw InputDomainError("patchify: got " + std::to_string(joined.c) +
                           " channels, config wants " + std::to_string(cfg.input_channels));
  }
  auto& g = b.graph();
  const int x = g.leaf(patch_matrix<S>(joined, cfg.patch));
  const int emb = linear(b, "embed", x, cfg.patch_dim(), cfg.dim);
  const int pos = b.param("pos", cfg.tokens(), cfg.dim, ParamInit::normal002);
  return g.add(emb, pos);
}

// N pre-norm encoder blocks; identity when encoder_blocks = 0.
template <typename S>
inline int build_encode(ParamBinder<S>& b, const TranslatorConfig& cfg, int tokens) {
  int x = tokens;
  for (int n = 0; n < cfg.encoder_blocks; ++n) {
    x = encoder_block(b, "enc." + std::to_string(n), x, cfg.dim, cfg.heads, cfg.mlp_ratio);
  }
  return x;
}

// Final normalization mapping encoded tokens to the contextual sequence the
// decoder attends into.
template <typename S>
inline int build_contextual(ParamBinder<S>& b, const TranslatorConfig& cfg, int encoded) {
  return layernorm(b, "ctx_ln", encoded, cfg.dim);
}

// Runs the learned queries through K decoder blocks against the contextual
// tokens, with a final normalization. Returns the Q×D query node.
template <typename S>
inline int build_decode_queries(ParamBinder<S>& b, const TranslatorConfig& cfg, int contextual) {
  auto& g = b.graph();
  int q = b.param("query", cfg.query_count(), cfg.dim, ParamInit::normal002);
  for (int k = 0; k < cfg.decoder_blocks; ++k) {
    q = decoder_block(b, "dec." + std::to_string(k), q, contextual, cfg.dim, cfg.heads,
                      cfg.mlp_ratio);
  }
  return layernorm(b, "dec_ln", q, cfg.dim);
}

// Pose regression head: E×2 coordinates squashed into [0,1] by a sigmoid.
template <typename S>
inline int build_decode_pose(ParamBinder<S>& b, const TranslatorConfig& cfg, int contextual) {
  const int q = build_decode_queries(b, cfg, contextual);
  return b.graph().sigmoid(linear(b, "pose_head", q, cfg.dim, 2));
}

// Mask head: per-patch logit tiles, M×(P²·2) in patch-space layout (pixel-
// major, class-minor) — reshape to (H·W)×2 gives per-pixel class logits.
template <typename S>
inline int build_decode_mask_logits(ParamBinder<S>& b, const TranslatorConfig& cfg,
                                    int contextual) {
  const int q = build_decode_queries(b, cfg, contextual);
  return linear(b, "mask_head", q, cfg.dim, cfg.patch * cfg.patch * 2);
}

// --- state construction and persistence ------------------------------------

inline TranslatorState init_translator(const TranslatorConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  TranslatorState state;
  state.config = cfg;
  Rng rng(mix_seed(seed, "translator-init"));
  Graph<float> g;
  ParamBinder<float> binder(g, state.params, rng);
  const Frame frame(cfg.height, cfg.width, cfg.input_channels >= 3 ? 3 : 1);
  const Frame layout(cfg.height, cfg.width, cfg.input_channels - frame.c);
  const int ctx = build_contextual(binder, cfg, build_encode(binder, cfg,
                                   build_patchify(binder, cfg, frame, layout)));
  if (cfg.mode == LayoutMode::pose) {
    build_decode_pose(binder, cfg, ctx);
  } else {
    build_decode_mask_logits(binder, cfg, ctx);
  }
  return state;
}

inline void save_translator(const std::filesystem::path& path, const TranslatorState& state,
                            const Adam<float>* adam = nullptr) {
  nlohmann::json config;
  config["kind"] = "layout_translator";
  config["model"] = to_json(state.config);
  if (!state.query_order.empty()) config["query_order"] = state.query_order;
  save_checkpoint(path, make_checkpoint(state.params, adam, std::move(config), state.step));
}

inline TranslatorState load_translator(const std::filesystem::path& path,
                                       Adam<float>* adam = nullptr) {
  const Checkpoint ckpt = load_checkpoint(path);
  if (ckpt.config.value("kind", "") != std::string("layout_translator")) {
    throw IoError("load_translator: " + path.string() + " is not a layout-translator checkpoint");
  }
  TranslatorState state = init_translator(translator_config_from_json(ckpt.config.at("model")),
                                          /*seed=*/0);
  state.step = ckpt.step;
  if (ckpt.config.contains("query_order")) {
    state.query_order = ckpt.config.at("query_order").get<std::vector<int>>();
    if (state.query_order.size() != static_cast<std::size_t>(state.config.queries)) {
      throw IoError("load_translator: query_order length does not match query count");
    }
  }
  restore_from_checkpoint(ckpt, state.params, adam);
  return state;
}

// --- inference -------------------------------------------------------------

// Contextual token sequence for one (frame, rendered layout) input; M×D.
inline Mat<float> encode_contextual(const TranslatorState& state, const Frame& frame,
                                    const Frame& layout_render) {
  Graph<float> g;
  ParamBinder<float> binder(g, state.params);
  const int ctx = build_contextual(binder, state.config,
                                   build_encode(binder, state.config,
                                                build_patchify(binder, state.config, frame,
                                                               layout_render)));
  return g.value(ctx);
}

// Predicted joint coordinates, E×2 in [0,1]. With a calibrated query order,
// row g is the raw query the calibration assigned to joint slot g, so rows
// line up with the hand-major ground-truth convention.
inline Mat<double> decode_pose(const TranslatorState& state, const Frame& frame,
                               const Frame& layout_render) {
  if (state.config.mode != LayoutMode::pose) {
    throw ConfigError("decode_pose: state is configured for mask mode");
  }
  Graph<float> g;
  ParamBinder<float> binder(g, state.params);
  const int ctx = build_contextual(binder, state.config,
                                   build_encode(binder, state.config,
                                                build_patchify(binder, state.config, frame,
                                                               layout_render)));
  const int pose = build_decode_pose(binder, state.config, ctx);
  Mat<double> raw = g.value(pose).cast<double>();
  if (state.query_order.empty()) return raw;
  if (state.query_order.size() != static_cast<std::size_t>(raw.rows())) {
    throw ConfigError("decode_pose: query_order length does not match query count");
  }
  Mat<double> ordered(raw.rows(), raw.cols());
  for (Eigen::Index r = 0; r < raw.rows(); ++r) {
    ordered.row(r) = raw.row(state.query_order[static_cast<std::size_t>(r)]);
  }
  return ordered;
}

// Vote accumulator that recovers the query→joint permutation a matched-loss
// training run settled on. Each fully-visible example contributes one vote per
// joint slot (hand-major order) for the raw query row the Hungarian match
// paired it with; resolve() turns the votes into one globally consistent
// assignment usable as TranslatorState::query_order.
class QueryOrderVotes {
 public:
  explicit QueryOrderVotes(int queries) : votes_(Mat<double>::Zero(queries, queries)) {}

  // Raw (unordered) predictions vs the ground-truth layout. Examples with
  // hidden joints are skipped: their hand-major slot positions shift, which
  // would smear votes across slots.
  void add(const Mat<double>& raw_pred, const PoseLayout& target) {
    if (raw_pred.rows() != votes_.rows()) {
      throw InputDomainError("QueryOrderVotes: prediction count does not match query count");
    }
    if (target.total_visible() != static_cast<int>(votes_.rows())) return;
    const MatchResult match = bipartite_match_loss(raw_pred, target);
    for (std::size_t g = 0; g < match.pred_index.size(); ++g) {
      votes_(static_cast<Eigen::Index>(g), match.pred_index[g]) += 1.0;
    }
    ++examples_;
  }

  int examples() const { return examples_; }

  // Maximum-agreement permutation (Hungarian on negated votes). Empty when no
  // example qualified, so callers fall back to the identity order.
  std::vector<int> resolve() const {
    if (examples_ == 0) return {};
    return hungarian_assign(-votes_);
  }

 private:
  Mat<double> votes_;
  int examples_ = 0;
};

// Packs an E×2 prediction into a pose layout: queries [h·J, (h+1)·J) form
// hand h, all joints visible.
inline PoseLayout pose_from_predictions(const Mat<double>& pred, int joints_per_hand) {
  PoseLayout layout;
  const int total = static_cast<int>(pred.rows());
  for (int start = 0; start < total; start += joints_per_hand) {
    Hand hand;
    const int end = std::min(total, start + joints_per_hand);
    for (int i = start; i < end; ++i) {
      hand.joints.push_back({std::clamp(pred(i, 0), 0.0, 1.0), std::clamp(pred(i, 1), 0.0, 1.0)});
      hand.visible.push_back(true);
    }
    layout.hands.push_back(std::move(hand));
  }
  return layout;
}

// Per-pixel (background, hand) probabilities, H×W×2, softmax over channels.
inline Tensor3 decode_mask(const TranslatorState& state, const Frame& frame,
                           const Frame& layout_render) {
  if (state.config.mode != LayoutMode::mask) {
    throw ConfigError("decode_mask: state is configured for pose mode");
  }
  Graph<float> g;
  ParamBinder<float> binder(g, state.params);
  const int ctx = build_contextual(binder, state.config,
                                   build_encode(binder, state.config,
                                                build_patchify(binder, state.config, frame,
                                                               layout_render)));
  const int logits = build_decode_mask_logits(binder, state.config, ctx);
  const TranslatorConfig& cfg = state.config;
  // Patch-space M×(P²·2) → H×W×2 logits, then per-pixel softmax.
  Tensor3 out = unpatch_matrix(g.value(logits), cfg.height, cfg.width, 2, cfg.patch);
  for (int y = 0; y < out.h; ++y) {
    for (int x = 0; x < out.w; ++x) {
      const float a = out.at(y, x, 0);
      const float b = out.at(y, x, 1);
      const float m = std::max(a, b);
      const float ea = std::exp(a - m);
      const float eb = std::exp(b - m);
      out.at(y, x, 0) = ea / (ea + eb);
      out.at(y, x, 1) = eb / (ea + eb);
    }
  }
  return out;
}

// Mean over pixels of −log softmax probability of the true class; pure value
// version for evaluation (training uses the in-graph equivalent).
inline double mask_ce_loss_value(const Tensor3& logits, const MaskLayout& gt) {
  if (logits.h != gt.h || logits.w != gt.w || logits.c != 2) {
    throw InputDomainError("mask_ce_loss: logits must be H×W×2 matching the mask");
  }
  double total = 0.0;
  for (int y = 0; y < gt.h; ++y) {
    for (int x = 0; x < gt.w; ++x) {
      const double a = logits.at(y, x, 0);
      const double b = logits.at(y, x, 1);
      const double m = std::max(a, b);
      const double lse = m + std::log(std::exp(a - m) + std::exp(b - m));
      total += lse - (gt.at(y, x) != 0 ? b : a);
    }
  }
  return total / (static_cast<double>(gt.h) * gt.w);
}

// --- training --------------------------------------------------------------

struct LayoutExample {
  Frame source_frame;        // exo frame
  Frame source_layout;       // rendered exo layout
  LayoutVariant target;      // ego pose or mask layout
};

struct TrainStepResult {
  double loss = 0.0;
  double grad_norm = 0.0;
};

namespace detail {

// Mask GT classes in patch-space pixel order (patch-major, then pixel within
// patch) — the row order of reshape(mask logits, H·W, 2).
inline std::vector<int> mask_targets_patch_order(const MaskLayout& gt, int patch) {
  const int gh = gt.h / patch;
  const int gw = gt.w / patch;
  std::vector<int> targets;
  targets.reserve(static_cast<std::size_t>(gt.h) * gt.w);
  for (int py = 0; py < gh; ++py) {
    for (int px = 0; px < gw; ++px) {
      for (int y = 0; y < patch; ++y) {
        for (int x = 0; x < patch; ++x) {
          targets.push_back(gt.at(py * patch + y, px * patch + x) != 0 ? 1 : 0);
        }
      }
    }
  }
  return targets;
}

inline std::string param_summary(const Params<float>& params) {
  double max_abs = 0.0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    max_abs = std::max(max_abs,
                       static_cast<double>(params.entry(i).second.cwiseAbs().maxCoeff()));
  }
  return "params=" + std::to_string(params.size()) + " max|w|=" + std::to_string(max_abs);
}

}  // namespace detail

// Builds the per-example loss node. For pose mode the Hungarian assignment is
// computed on the forward output and frozen; the differentiable loss gathers
// the matched prediction rows. Returns (loss node id, reported double loss).
template <typename S>
inline std::pair<int, double> build_layout_loss(ParamBinder<S>& b, const TranslatorConfig& cfg,
                                                const LayoutExample& example) {
  auto& g = b.graph();
  const int ctx = build_contextual(b, cfg, build_encode(b, cfg,
                                   build_patchify(b, cfg, example.source_frame,
                                                  example.source_layout)));
  if (cfg.mode == LayoutMode::pose) {
    const auto* gt = std::get_if<PoseLayout>(&example.target);
    if (gt == nullptr) throw InputDomainError("train: pose mode requires pose targets");
    const int pose = build_decode_pose(b, cfg, ctx);
    const MatchResult match = bipartite_match_loss(g.value(pose).template cast<double>(), *gt);
    if (match.gt.empty()) return {-1, 0.0};
    Mat<S> gt_mat(static_cast<Eigen::Index>(match.gt.size()), 2);
    for (std::size_t i = 0; i < match.gt.size(); ++i) {
      gt_mat(static_cast<Eigen::Index>(i), 0) = static_cast<S>(match.gt[i][0]);
      gt_mat(static_cast<Eigen::Index>(i), 1) = static_cast<S>(match.gt[i][1]);
    }
    const int gathered = g.gather_rows(pose, match.pred_index);
    const int loss = g.sum_abs_scaled(g.sub(gathered, g.leaf(std::move(gt_mat))),
                                      S(1) / S(match.gt.size()));
    return {loss, match.loss};
  }
  const auto* gt = std::get_if<MaskLayout>(&example.target);
  if (gt == nullptr) throw InputDomainError("train: mask mode requires mask targets");
  if (gt->h != cfg.height || gt->w != cfg.width) {
    throw InputDomainError("train: mask target dims disagree with config");
  }
  const int logits = build_decode_mask_logits(b, cfg, ctx);
  const int per_pixel = g.reshape(logits, cfg.height * cfg.width, 2);
  const int loss = g.softmax_ce_rows(per_pixel, detail::mask_targets_patch_order(*gt, cfg.patch));
  return {loss, static_cast<double>(g.value_scalar(loss))};
}

// One optimizer step on the mean batch loss. Gradients are averaged over the
// batch, globally norm-clipped, and applied with Adam. A non-finite loss
// aborts with a diagnostic dump of the state.
inline TrainStepResult train_step_layout(TranslatorState& state, Adam<float>& adam,
                                         const std::vector<LayoutExample>& batch,
                                         const AdamConfig& optim) {
  if (batch.empty()) throw InputDomainError("train_step_layout: empty batch");
  auto grads = make_grad_accumulator(state.params);
  double loss_total = 0.0;
  for (const auto& example : batch) {
    Graph<float> g;
    ParamBinder<float> binder(g, state.params);
    const auto [loss_node, loss_value] = build_layout_loss(binder, state.config, example);
    loss_total += loss_value;
    if (loss_node >= 0) {
      g.backward(loss_node);
      binder.add_grads_to(grads);
    }
  }
  const double loss = loss_total / static_cast<double>(batch.size());
  if (!std::isfinite(loss)) {
    throw TrainingError("train_step_layout: non-finite loss at step " +
                        std::to_string(state.step) + " (" +
                        detail::param_summary(state.params) + ")");
  }
  const float inv_b = 1.0f / static_cast<float>(batch.size());
  for (auto& grad : grads) grad *= inv_b;
  TrainStepResult result;
  result.loss = loss;
  result.grad_norm = clip_global_norm(grads, /*clip_norm=*/-1.0);  // report pre-clip norm
  adam.step(state.params, grads, optim);
  ++state.step;
  return result;
}

}  // namespace crossview
