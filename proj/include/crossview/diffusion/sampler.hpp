#pragma once

#include <cmath>
#include <cstdint>
#include <string>

#include "crossview/core/errors.hpp"
#include "crossview/core/rng.hpp"
#include "crossview/core/tensor3.hpp"
#include "crossview/diffusion/denoiser.hpp"
#include "crossview/diffusion/schedule.hpp"

namespace crossview {

enum class SamplerKind { deterministic, ancestral };

inline const char* to_string(SamplerKind k) {
  return k == SamplerKind::deterministic ? "deterministic" : "ancestral";
}

inline SamplerKind sampler_kind_from_string(const std::string& s) {
  if (s == "deterministic") return SamplerKind::deterministic;
  if (s == "ancestral") return SamplerKind::ancestral;
  throw ConfigError("unknown sampler '" + s + "'");
}

// Reverse process: start from z^N ~ N(0, I) and iterate n = N..1. Each step
// asks the predictor for the clean-latent estimate ẑ, recovers the implied
// noise ε̂ = (z^n − α^n ẑ)/σ^n, and moves to z^{n−1}:
//   deterministic — z^{n−1} = α^{n−1} ẑ + σ^{n−1} ε̂ (the η = 0 update);
//   ancestral     — posterior mean with lower-bound variance β̃, noise-free at
//                   the final step.
inline Latent sample(const Latent& cond, const NoiseSchedule& sched,
                     const DenoisePredictor& predictor, int latent_c, std::uint64_t seed,
                     SamplerKind kind) {
  sched.validate();
  Rng rng(seed);
  Latent z(cond.h, cond.w, latent_c);
  for (auto& v : z.data) v = static_cast<float>(rng.normal());
  for (int n = sched.steps; n >= 1; --n) {
    const double a_n = sched.alpha[static_cast<std::size_t>(n)];
    const double s_n = sched.sigma[static_cast<std::size_t>(n)];
    const double a_p = sched.alpha[static_cast<std::size_t>(n) - 1];
    const double s_p = sched.sigma[static_cast<std::size_t>(n) - 1];
    if (s_n <= 0.0) {
      throw NumericalError("sample: sigma vanished mid-trajectory at step " + std::to_string(n));
    }
    const Latent zhat = predictor(z, cond, n);
    require_same_shape(z, zhat, "sample: predictor output");
    if (kind == SamplerKind::deterministic) {
      // ε̂ substituted into the n−1 marginal: coefficient of z is σ^{n−1}/σ^n.
      const double c_z = s_p / s_n;
      const double c_hat = a_p - a_n * c_z;
      for (std::size_t i = 0; i < z.data.size(); ++i) {
        z.data[i] = static_cast<float>(c_hat * zhat.data[i] + c_z * z.data[i]);
      }
    } else {
      // Per-step β_n from the alpha ratio; posterior
      //   μ = (α^{n−1} β_n / (σ^n)²) ẑ + (√(1−β_n) (σ^{n−1})² / (σ^n)²) z^n,
      //   variance β̃ = β_n (σ^{n−1})² / (σ^n)².
      const double ratio = a_n / a_p;
      const double beta = 1.0 - ratio * ratio;
      const double var_n = s_n * s_n;
      const double c_hat = a_p * beta / var_n;
      const double c_z = std::sqrt(1.0 - beta) * (s_p * s_p) / var_n;
      const double noise_std = n > 1 ? std::sqrt(beta * (s_p * s_p) / var_n) : 0.0;
      for (std::size_t i = 0; i < z.data.size(); ++i) {
        const double mean = c_hat * zhat.data[i] + c_z * z.data[i];
        z.data[i] = static_cast<float>(mean + noise_std * rng.normal());
      }
    }
  }
  return z;
}

}  // namespace crossview
