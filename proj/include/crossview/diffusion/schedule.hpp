#pragma once

#include <cmath>
#include <string>
#include <vector>

#include <json.hpp>

#include "crossview/core/errors.hpp"
#include "crossview/core/tensor3.hpp"

namespace crossview {

enum class ScheduleKind { linear_beta, cosine };

inline const char* to_string(ScheduleKind k) {
  return k == ScheduleKind::linear_beta ? "linear_beta" : "cosine";
}

inline ScheduleKind schedule_kind_from_string(const std::string& s) {
  if (s == "linear_beta") return ScheduleKind::linear_beta;
  if (s == "cosine") return ScheduleKind::cosine;
  throw ConfigError("unknown schedule kind '" + s + "'");
}

// Variance-preserving noise schedule: alpha[n]² + sigma[n]² = 1, alpha[0] = 1,
// sigma[0] = 0, alpha strictly decreasing. Arrays are indexed 0..steps.
// Checkpoints persist only (kind, steps, derivation params), never the tables.
struct NoiseSchedule {
  ScheduleKind kind = ScheduleKind::linear_beta;
  int steps = 0;
  double beta_min = 1e-4;   // linear_beta
  double beta_max = 0.02;
  double cosine_offset = 0.008;  // cosine
  std::vector<double> alpha;
  std::vector<double> sigma;

  void validate() const {
    if (steps < 1) throw ConfigError("schedule: steps must be >= 1");
    if (alpha.size() != static_cast<std::size_t>(steps) + 1 || sigma.size() != alpha.size()) {
      throw ConfigError("schedule: table size mismatch");
    }
    if (alpha[0] != 1.0 || sigma[0] != 0.0) {
      throw ConfigError("schedule: boundary must be (alpha, sigma) = (1, 0) at n = 0");
    }
    for (int n = 1; n <= steps; ++n) {
      const std::size_t i = static_cast<std::size_t>(n);
      if (!(alpha[i] < alpha[i - 1])) throw ConfigError("schedule: alpha must strictly decrease");
      if (!(sigma[i] > sigma[i - 1])) throw ConfigError("schedule: sigma must strictly increase");
      const double vp = alpha[i] * alpha[i] + sigma[i] * sigma[i];
      if (std::abs(vp - 1.0) > 1e-6) throw ConfigError("schedule: variance not preserved");
    }
  }
};

namespace detail {

inline NoiseSchedule from_alpha_bar(NoiseSchedule sched, const std::vector<double>& alpha_bar) {
  sched.alpha.assign(static_cast<std::size_t>(sched.steps) + 1, 0.0);
  sched.sigma.assign(static_cast<std::size_t>(sched.steps) + 1, 0.0);
  sched.alpha[0] = 1.0;
  sched.sigma[0] = 0.0;
  for (int n = 1; n <= sched.steps; ++n) {
    const double ab = alpha_bar[static_cast<std::size_t>(n)];
    sched.alpha[static_cast<std::size_t>(n)] = std::sqrt(ab);
    sched.sigma[static_cast<std::size_t>(n)] = std::sqrt(1.0 - ab);
  }
  sched.validate();
  return sched;
}

}  // namespace detail

// linear_beta: per-step β linearly spaced over [beta_min, beta_max] (a single
// step uses beta_min); ᾱ_n = Π (1 − β_k); alpha = √ᾱ, sigma = √(1−ᾱ).
inline NoiseSchedule build_linear_schedule(int steps, double beta_min, double beta_max) {
  if (steps < 1) throw ConfigError("build_schedule: steps must be >= 1");
  if (!(beta_min > 0.0 && beta_min < 1.0) || !(beta_max > 0.0 && beta_max < 1.0)) {
    throw ConfigError("build_schedule: betas must lie in (0,1)");
  }
  if (beta_max < beta_min) throw ConfigError("build_schedule: beta_max < beta_min");
  NoiseSchedule sched;
  sched.kind = ScheduleKind::linear_beta;
  sched.steps = steps;
  sched.beta_min = beta_min;
  sched.beta_max = beta_max;
  std::vector<double> alpha_bar(static_cast<std::size_t>(steps) + 1, 1.0);
  double prod = 1.0;
  for (int n = 1; n <= steps; ++n) {
    const double beta =
        steps == 1 ? beta_min
                   : beta_min + (beta_max - beta_min) * static_cast<double>(n - 1) / (steps - 1);
    prod *= 1.0 - beta;
    alpha_bar[static_cast<std::size_t>(n)] = prod;
  }
  return detail::from_alpha_bar(std::move(sched), alpha_bar);
}

// cosine: ᾱ_n = f(n)/f(0) with f(t) = cos²(((t/N + s)/(1 + s))·π/2); per-step
// β clipped at 0.999 and ᾱ rebuilt from the clipped steps.
inline NoiseSchedule build_cosine_schedule(int steps, double offset = 0.008) {
  if (steps < 1) throw ConfigError("build_schedule: steps must be >= 1");
  if (!(offset > 0.0)) throw ConfigError("build_schedule: cosine offset must be positive");
  NoiseSchedule sched;
  sched.kind = ScheduleKind::cosine;
  sched.steps = steps;
  sched.cosine_offset = offset;
  auto f = [steps, offset](double t) {
    const double x = ((t / steps + offset) / (1.0 + offset)) * (M_PI / 2.0);
    const double c = std::cos(x);
    return c * c;
  };
  const double f0 = f(0.0);
  std::vector<double> alpha_bar(static_cast<std::size_t>(steps) + 1, 1.0);
  double prev = 1.0;
  double prod = 1.0;
  for (int n = 1; n <= steps; ++n) {
    const double raw = f(static_cast<double>(n)) / f0;
    double beta = 1.0 - raw / prev;
    beta = std::min(beta, 0.999);
    prod *= 1.0 - beta;
    alpha_bar[static_cast<std::size_t>(n)] = prod;
    prev = raw;
  }
  return detail::from_alpha_bar(std::move(sched), alpha_bar);
}

inline NoiseSchedule build_schedule(ScheduleKind kind, int steps, double beta_min = 1e-4,
                                    double beta_max = 0.02, double cosine_offset = 0.008) {
  return kind == ScheduleKind::linear_beta ? build_linear_schedule(steps, beta_min, beta_max)
                                           : build_cosine_schedule(steps, cosine_offset);
}

inline nlohmann::json to_json(const NoiseSchedule& s) {
  nlohmann::json j;
  j["kind"] = to_string(s.kind);
  j["steps"] = s.steps;
  if (s.kind == ScheduleKind::linear_beta) {
    j["beta_min"] = s.beta_min;
    j["beta_max"] = s.beta_max;
  } else {
    j["cosine_offset"] = s.cosine_offset;
  }
  return j;
}

inline NoiseSchedule schedule_from_json(const nlohmann::json& j) {
  const ScheduleKind kind = schedule_kind_from_string(j.at("kind").get<std::string>());
  const int steps = j.at("steps").get<int>();
  if (kind == ScheduleKind::linear_beta) {
    return build_linear_schedule(steps, j.value("beta_min", 1e-4), j.value("beta_max", 0.02));
  }
  return build_cosine_schedule(steps, j.value("cosine_offset", 0.008));
}

// z^n = α^n z + σ^n ε, elementwise.
inline Latent forward_diffuse(const Latent& z, int n, const Latent& eps,
                              const NoiseSchedule& sched) {
  if (n < 0 || n > sched.steps) throw InputDomainError("forward_diffuse: step out of range");
  require_same_shape(z, eps, "forward_diffuse");
  const float a = static_cast<float>(sched.alpha[static_cast<std::size_t>(n)]);
  const float s = static_cast<float>(sched.sigma[static_cast<std::size_t>(n)]);
  Latent out = z;
  for (std::size_t i = 0; i < out.data.size(); ++i) {
    out.data[i] = a * z.data[i] + s * eps.data[i];
  }
  return out;
}

}  // namespace crossview
