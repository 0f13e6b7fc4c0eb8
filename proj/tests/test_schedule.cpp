// Variance-preserving noise schedules: boundary values, monotonicity, the
// variance identity, closed-form cumulative products, and forward diffusion.

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "crossview/diffusion/schedule.hpp"

using namespace crossview;

namespace {

// Independent ᾱ recurrence for the linear-β family.
std::vector<double> linear_alpha_bar(int steps, double beta_min, double beta_max) {
  std::vector<double> ab(static_cast<std::size_t>(steps) + 1, 1.0);
  for (int n = 1; n <= steps; ++n) {
    const double beta =
        steps == 1 ? beta_min : beta_min + (beta_max - beta_min) * (n - 1.0) / (steps - 1.0);
    ab[static_cast<std::size_t>(n)] = ab[static_cast<std::size_t>(n - 1)] * (1.0 - beta);
  }
  return ab;
}

void expect_vp_invariants(const NoiseSchedule& s) {
  ASSERT_EQ(s.alpha.size(), static_cast<std::size_t>(s.steps) + 1);
  ASSERT_EQ(s.sigma.size(), static_cast<std::size_t>(s.steps) + 1);
  EXPECT_EQ(s.alpha[0], 1.0);
  EXPECT_EQ(s.sigma[0], 0.0);
  for (int n = 1; n <= s.steps; ++n) {
    const std::size_t i = static_cast<std::size_t>(n);
    EXPECT_LT(s.alpha[i], s.alpha[i - 1]) << "n=" << n;
    EXPECT_GT(s.sigma[i], s.sigma[i - 1]) << "n=" << n;
    EXPECT_NEAR(s.alpha[i] * s.alpha[i] + s.sigma[i] * s.sigma[i], 1.0, 1e-6) << "n=" << n;
  }
}

}  // namespace

TEST(Schedule, LinearFamilyInvariantsAcrossSizes) {
  for (int steps : {10, 100, 1000}) {
    expect_vp_invariants(build_linear_schedule(steps, 1e-4, 0.02));
  }
}

TEST(Schedule, CosineFamilyInvariantsAcrossSizes) {
  for (int steps : {10, 100, 1000}) {
    expect_vp_invariants(build_cosine_schedule(steps));
  }
}

TEST(Schedule, LinearMatchesCumulativeProductOracle) {
  const int steps = 100;
  const NoiseSchedule s = build_linear_schedule(steps, 1e-4, 0.02);
  const std::vector<double> ab = linear_alpha_bar(steps, 1e-4, 0.02);
  for (int n = 0; n <= steps; ++n) {
    const std::size_t i = static_cast<std::size_t>(n);
    EXPECT_NEAR(s.alpha[i], std::sqrt(ab[i]), 1e-9) << "n=" << n;
    EXPECT_NEAR(s.sigma[i], std::sqrt(1.0 - ab[i]), 1e-9) << "n=" << n;
  }
}

TEST(Schedule, CosineMatchesScaledCosineSquared) {
  // Away from the β clip, ᾱ_n should equal f(n)/f(0) directly.
  const int steps = 50;
  const double offset = 0.008;
  const NoiseSchedule s = build_cosine_schedule(steps, offset);
  auto f = [&](double t) {
    const double x = ((t / steps + offset) / (1.0 + offset)) * (M_PI / 2.0);
    return std::cos(x) * std::cos(x);
  };
  // The closed form holds wherever the per-step β stayed under the 0.999
  // clip; near n = N the ratio collapses and clipping takes over.
  int clipped_from = steps + 1;
  for (int n = 1; n <= steps; ++n) {
    if (1.0 - f(n) / f(n - 1.0) > 0.999) {
      clipped_from = n;
      break;
    }
  }
  EXPECT_GT(clipped_from, steps / 2);  // clipping, if any, only at the tail
  for (int n = 0; n < clipped_from; ++n) {
    const double ab = f(n) / f(0.0);
    const std::size_t i = static_cast<std::size_t>(n);
    EXPECT_NEAR(s.alpha[i] * s.alpha[i], ab, 1e-9) << "n=" << n;
  }
}

TEST(Schedule, SingleStepUsesBetaMin) {
  const NoiseSchedule s = build_linear_schedule(1, 0.3, 0.9);
  EXPECT_NEAR(s.alpha[1], std::sqrt(1.0 - 0.3), 1e-15);
  EXPECT_NEAR(s.sigma[1], std::sqrt(0.3), 1e-15);
}

TEST(Schedule, BuilderContracts) {
  EXPECT_THROW(build_linear_schedule(0, 1e-4, 0.02), ConfigError);
  EXPECT_THROW(build_linear_schedule(10, 0.0, 0.02), ConfigError);
  EXPECT_THROW(build_linear_schedule(10, 1e-4, 1.0), ConfigError);
  EXPECT_THROW(build_linear_schedule(10, 0.02, 0.01), ConfigError);
  EXPECT_THROW(build_cosine_schedule(0), ConfigError);
  EXPECT_THROW(build_cosine_schedule(10, 0.0), ConfigError);
}

TEST(Schedule, ValidateCatchesTamperedTables) {
  NoiseSchedule s = build_linear_schedule(10, 1e-4, 0.02);
  s.validate();
  NoiseSchedule bad = s;
  bad.alpha[0] = 0.999;
  EXPECT_THROW(bad.validate(), ConfigError);
  bad = s;
  bad.alpha[5] = bad.alpha[4];  // breaks strict decrease
  EXPECT_THROW(bad.validate(), ConfigError);
  bad = s;
  bad.sigma[7] = bad.sigma[7] + 0.05;  // breaks the variance identity
  EXPECT_THROW(bad.validate(), ConfigError);
  bad = s;
  bad.alpha.pop_back();
  EXPECT_THROW(bad.validate(), ConfigError);
}

TEST(Schedule, JsonRoundTripRebuildsIdenticalTables) {
  const NoiseSchedule lin = build_linear_schedule(37, 2e-3, 0.4);
  const NoiseSchedule lin2 = schedule_from_json(to_json(lin));
  EXPECT_EQ(lin2.kind, ScheduleKind::linear_beta);
  EXPECT_EQ(lin2.steps, 37);
  EXPECT_EQ(lin2.alpha, lin.alpha);
  EXPECT_EQ(lin2.sigma, lin.sigma);
  // Only derivation parameters are serialized, never the tables.
  const nlohmann::json j = to_json(lin);
  EXPECT_FALSE(j.contains("alpha"));
  EXPECT_FALSE(j.contains("sigma"));
  EXPECT_FALSE(j.contains("cosine_offset"));

  const NoiseSchedule cos = build_cosine_schedule(21, 0.01);
  const NoiseSchedule cos2 = schedule_from_json(to_json(cos));
  EXPECT_EQ(cos2.alpha, cos.alpha);
  EXPECT_FALSE(to_json(cos).contains("beta_min"));

  EXPECT_THROW(schedule_from_json(nlohmann::json{{"kind", "quadratic"}, {"steps", 5}}),
               ConfigError);
}

TEST(ForwardDiffuse, BlendsSignalAndNoiseByTheTables) {
  const NoiseSchedule s = build_linear_schedule(10, 1e-2, 0.2);
  Latent z(2, 3, 1);
  Latent eps(2, 3, 1);
  for (std::size_t i = 0; i < z.data.size(); ++i) {
    z.data[i] = 0.1f * static_cast<float>(i) - 0.2f;
    eps.data[i] = 0.05f * static_cast<float>(i) + 0.3f;
  }
  // n = 0 is the identity: pure signal, no noise.
  const Latent z0 = forward_diffuse(z, 0, eps, s);
  for (std::size_t i = 0; i < z.data.size(); ++i) EXPECT_EQ(z0.data[i], z.data[i]);

  const int n = 7;
  const Latent zn = forward_diffuse(z, n, eps, s);
  const float a = static_cast<float>(s.alpha[n]);
  const float sg = static_cast<float>(s.sigma[n]);
  for (std::size_t i = 0; i < z.data.size(); ++i) {
    EXPECT_EQ(zn.data[i], a * z.data[i] + sg * eps.data[i]);
  }

  EXPECT_THROW(forward_diffuse(z, -1, eps, s), InputDomainError);
  EXPECT_THROW(forward_diffuse(z, 11, eps, s), InputDomainError);
  EXPECT_THROW(forward_diffuse(z, 3, Latent(2, 2, 1), s), InputDomainError);
}
