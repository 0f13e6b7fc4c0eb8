#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "crossview/core/errors.hpp"
#include "crossview/core/tensor3.hpp"
#include "crossview/nn/graph.hpp"
#include "crossview/nn/params.hpp"

namespace crossview {

// Graph builders shared by the layout translator and the denoiser. Parameter
// names are dotted paths rooted at the caller's prefix; building with a
// create-mode binder materializes every parameter the forward pass touches.

template <typename S>
inline int linear(ParamBinder<S>& b, const std::string& prefix, int x, int in_dim, int out_dim) {
  auto& g = b.graph();
  const int w = b.param(prefix + ".w", in_dim, out_dim, ParamInit::normal002);
  const int bias = b.param(prefix + ".b", 1, out_dim, ParamInit::zero);
  return g.add_rowvec(g.matmul(x, w), bias);
}

template <typename S>
inline int layernorm(ParamBinder<S>& b, const std::string& prefix, int x, int dim) {
  auto& g = b.graph();
  const int gain = b.param(prefix + ".g", 1, dim, ParamInit::one);
  const int bias = b.param(prefix + ".b", 1, dim, ParamInit::zero);
  return g.layernorm(x, gain, bias);
}

// Multi-head scaled dot-product attention. q_in supplies queries; kv_in
// supplies keys and values (pass q_in for self-attention). Heads are column
// blocks of the fused projections.
template <typename S>
inline int attention(ParamBinder<S>& b, const std::string& prefix, int q_in, int kv_in, int dim,
                     int heads) {
  if (heads < 1 || dim % heads != 0) throw ConfigError("attention: dim must divide into heads");
  auto& g = b.graph();
  const int dh = dim / heads;
  const int q = linear(b, prefix + ".q", q_in, dim, dim);
  const int k = linear(b, prefix + ".k", kv_in, dim, dim);
  const int v = linear(b, prefix + ".v", kv_in, dim, dim);
  const S inv_sqrt_dh = S(1) / std::sqrt(S(dh));
  int merged = -1;
  for (int h = 0; h < heads; ++h) {
    const int qh = g.col_block(q, h * dh, dh);
    const int kh = g.col_block(k, h * dh, dh);
    const int vh = g.col_block(v, h * dh, dh);
    const int probs = g.softmax_rows(g.scale(g.matmul_nt(qh, kh), inv_sqrt_dh));
    const int oh = g.matmul(probs, vh);
    merged = (h == 0) ? oh : g.concat_cols(merged, oh);
  }
  return linear(b, prefix + ".o", merged, dim, dim);
}

// Two-layer MLP with GELU.
template <typename S>
inline int mlp(ParamBinder<S>& b, const std::string& prefix, int x, int dim, int mlp_ratio) {
  auto& g = b.graph();
  const int hidden = dim * mlp_ratio;
  const int h = g.gelu(linear(b, prefix + ".l1", x, dim, hidden));
  return linear(b, prefix + ".l2", h, hidden, dim);
}

// Pre-norm encoder block:
//   z = x + Attention(Norm(x));  out = z + MLP(Norm(z)).
template <typename S>
inline int encoder_block(ParamBinder<S>& b, const std::string& prefix, int x, int dim, int heads,
                         int mlp_ratio) {
  auto& g = b.graph();
  const int n1 = layernorm(b, prefix + ".ln1", x, dim);
  const int z = g.add(x, attention(b, prefix + ".attn", n1, n1, dim, heads));
  const int n2 = layernorm(b, prefix + ".ln2", z, dim);
  return g.add(z, mlp(b, prefix + ".mlp", n2, dim, mlp_ratio));
}

// Pre-norm decoder block: query self-attention, cross-attention into the
// (already normalized) memory stream, then MLP — each with a residual.
template <typename S>
inline int decoder_block(ParamBinder<S>& b, const std::string& prefix, int queries, int memory,
                         int dim, int heads, int mlp_ratio) {
  auto& g = b.graph();
  const int n1 = layernorm(b, prefix + ".ln1", queries, dim);
  const int x1 = g.add(queries, attention(b, prefix + ".self", n1, n1, dim, heads));
  const int n2 = layernorm(b, prefix + ".ln2", x1, dim);
  const int x2 = g.add(x1, attention(b, prefix + ".cross", n2, memory, dim, heads));
  const int n3 = layernorm(b, prefix + ".ln3", x2, dim);
  return g.add(x2, mlp(b, prefix + ".mlp", n3, dim, mlp_ratio));
}

// Fixed sinusoidal embedding of an integer step: width/2 sin terms then
// width/2 cos terms at geometrically spaced frequencies.
template <typename S>
inline Mat<S> sinusoidal_embedding(int n, int width) {
  if (width < 2 || width % 2 != 0) throw ConfigError("sinusoidal_embedding: width must be even");
  Mat<S> emb(1, width);
  const int half = width / 2;
  for (int i = 0; i < half; ++i) {
    const double freq = std::exp(-std::log(10000.0) * static_cast<double>(i) / half);
    emb(0, i) = static_cast<S>(std::sin(n * freq));
    emb(0, half + i) = static_cast<S>(std::cos(n * freq));
  }
  return emb;
}

// Learned projection of the sinusoidal step embedding to a 1×dim row that is
// broadcast-added onto the token sequence.
template <typename S>
inline int timestep_embed(ParamBinder<S>& b, const std::string& prefix, int n, int width,
                          int dim) {
  auto& g = b.graph();
  const int sin_leaf = g.leaf(sinusoidal_embedding<S>(n, width));
  const int h = g.gelu(linear(b, prefix + ".l1", sin_leaf, width, dim));
  return linear(b, prefix + ".l2", h, dim, dim);
}

// --- patch <-> token layout -------------------------------------------------
// Patch m = py·(W/P)+px in row-major patch order; within a patch, values are
// flattened pixel-major then channel: index = (y·P + x)·C + c.

template <typename S>
inline Mat<S> patch_matrix(const Tensor3& img, int patch) {
  if (patch < 1 || img.h % patch != 0 || img.w % patch != 0) {
    throw InputDomainError("patch_matrix: image dims must be divisible by patch size");
  }
  const int gh = img.h / patch;
  const int gw = img.w / patch;
  Mat<S> out(gh * gw, patch * patch * img.c);
  for (int py = 0; py < gh; ++py) {
    for (int px = 0; px < gw; ++px) {
      const int m = py * gw + px;
      int col = 0;
      for (int y = 0; y < patch; ++y) {
        for (int x = 0; x < patch; ++x) {
          for (int c = 0; c < img.c; ++c) {
            out(m, col++) = static_cast<S>(img.at(py * patch + y, px * patch + x, c));
          }
        }
      }
    }
  }
  return out;
}

template <typename S>
inline Tensor3 unpatch_matrix(const Mat<S>& tokens, int h, int w, int channels, int patch) {
  const int gh = h / patch;
  const int gw = w / patch;
  if (h % patch != 0 || w % patch != 0 || tokens.rows() != gh * gw ||
      tokens.cols() != patch * patch * channels) {
    throw InputDomainError("unpatch_matrix: token shape inconsistent with target dims");
  }
  Tensor3 img(h, w, channels);
  for (int py = 0; py < gh; ++py) {
    for (int px = 0; px < gw; ++px) {
      const int m = py * gw + px;
      int col = 0;
      for (int y = 0; y < patch; ++y) {
        for (int x = 0; x < patch; ++x) {
          for (int c = 0; c < channels; ++c) {
            img.at(py * patch + y, px * patch + x, c) = static_cast<float>(tokens(m, col++));
          }
        }
      }
    }
  }
  return img;
}

}  // namespace crossview
