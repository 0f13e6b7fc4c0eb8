#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "crossview/core/errors.hpp"
#include "crossview/nn/params.hpp"

namespace crossview {

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double clip_norm = 1.0;  // global gradient-norm clip; <= 0 disables
};

// Scales grads in place so their global L2 norm is at most clip_norm.
// Returns the pre-clip norm (computed in double).
template <typename S>
inline double clip_global_norm(std::vector<Mat<S>>& grads, double clip_norm) {
  double sq = 0.0;
  for (const auto& g : grads) sq += static_cast<double>(g.template cast<double>().squaredNorm());
  const double norm = std::sqrt(sq);
  if (clip_norm > 0.0 && norm > clip_norm && norm > 0.0) {
    const S factor = static_cast<S>(clip_norm / norm);
    for (auto& g : grads) g *= factor;
  }
  return norm;
}

// Adam with bias correction. Moment arrays are aligned with the Params
// insertion order and are part of the training state (checkpointed so resumed
// runs continue bit-exactly).
template <typename S>
class Adam {
 public:
  Adam() = default;
  explicit Adam(const Params<S>& params) { reset(params); }

  void reset(const Params<S>& params) {
    m_.assign(params.size(), Mat<S>());
    v_.assign(params.size(), Mat<S>());
    for (std::size_t i = 0; i < params.size(); ++i) {
      const auto& p = params.entry(i).second;
      m_[i] = Mat<S>::Zero(p.rows(), p.cols());
      v_[i] = Mat<S>::Zero(p.rows(), p.cols());
    }
    t_ = 0;
  }

  void step(Params<S>& params, std::vector<Mat<S>>& grads, const AdamConfig& cfg) {
    if (grads.size() != params.size() || m_.size() != params.size()) {
      throw ConfigError("Adam::step: state/gradient size mismatch");
    }
    clip_global_norm(grads, cfg.clip_norm);
    ++t_;
    const S b1 = static_cast<S>(cfg.beta1);
    const S b2 = static_cast<S>(cfg.beta2);
    const S corr1 = static_cast<S>(1.0 - std::pow(cfg.beta1, static_cast<double>(t_)));
    const S corr2 = static_cast<S>(1.0 - std::pow(cfg.beta2, static_cast<double>(t_)));
    const S lr = static_cast<S>(cfg.lr);
    const S eps = static_cast<S>(cfg.eps);
    for (std::size_t i = 0; i < params.size(); ++i) {
      auto& p = params.entry(i).second;
      const auto& g = grads[i];
      m_[i] = b1 * m_[i] + (S(1) - b1) * g;
      v_[i] = b2 * v_[i] + (S(1) - b2) * g.cwiseProduct(g);
      const Mat<S> mhat = m_[i] / corr1;
      const Mat<S> vhat = v_[i] / corr2;
      p.array() -= lr * mhat.array() / (vhat.array().sqrt() + eps);
    }
  }

  std::uint64_t t() const { return t_; }
  void set_t(std::uint64_t t) { t_ = t; }
  std::size_t size() const { return m_.size(); }
  const Mat<S>& moment1(std::size_t i) const { return m_[i]; }
  const Mat<S>& moment2(std::size_t i) const { return v_[i]; }
  Mat<S>& moment1(std::size_t i) { return m_[i]; }
  Mat<S>& moment2(std::size_t i) { return v_[i]; }

 private:
  std::vector<Mat<S>> m_;
  std::vector<Mat<S>> v_;
  std::uint64_t t_ = 0;
};

}  // namespace crossview
