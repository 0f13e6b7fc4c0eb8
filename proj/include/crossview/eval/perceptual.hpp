#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "crossview/core/errors.hpp"
#include "crossview/core/image_ops.hpp"
#include "crossview/core/rng.hpp"
#include "crossview/core/tensor3.hpp"

namespace crossview {

// Frame -> fixed-dimension embedding. Real pretrained backbones can plug in
// behind this interface; the shipped implementation is a deterministic seeded
// random projection for desk-scale testing.
class FeatureExtractor {
 public:
  virtual ~FeatureExtractor() = default;
  virtual std::vector<double> embed(const Frame& frame) const = 0;
  virtual int dim() const = 0;
  virtual std::string name() const = 0;
};

// Resizes the luma image to a grid×grid patch and applies a fixed random
// projection drawn once from the seed: e = A · vec(patch), A ∈ R^{F×grid²},
// entries N(0, 1/grid²).
class RandomProjectionExtractor final : public FeatureExtractor {
 public:
  RandomProjectionExtractor(std::string name, std::uint64_t seed, int feature_dim = 16,
                            int grid = 16)
      : name_(std::move(name)), dim_(feature_dim), grid_(grid),
        projection_(feature_dim, grid * grid) {
    if (feature_dim < 1 || grid < 1) {
      throw ConfigError("RandomProjectionExtractor: dims must be positive");
    }
    Rng rng(seed);
    const double scale = 1.0 / grid;  // 1/sqrt(grid²)
    for (Eigen::Index r = 0; r < projection_.rows(); ++r) {
      for (Eigen::Index c = 0; c < projection_.cols(); ++c) {
        projection_(r, c) = scale * rng.normal();
      }
    }
  }

  std::vector<double> embed(const Frame& frame) const override {
    const Tensor3 gray = to_gray(frame);
    const Tensor3 patch = crop_resize(gray, Roi::full(gray), grid_);
    Eigen::VectorXd x(grid_ * grid_);
    for (int y = 0; y < grid_; ++y) {
      for (int xx = 0; xx < grid_; ++xx) {
        x(y * grid_ + xx) = patch.at(y, xx, 0);
      }
    }
    const Eigen::VectorXd e = projection_ * x;
    return std::vector<double>(e.data(), e.data() + e.size());
  }

  int dim() const override { return dim_; }
  std::string name() const override { return name_; }

 private:
  std::string name_;
  int dim_;
  int grid_;
  Eigen::MatrixXd projection_;
};

namespace detail {

inline std::vector<double> unit_normalize(std::vector<double> v) {
  double sq = 0.0;
  for (double x : v) sq += x * x;
  const double norm = std::sqrt(sq);
  if (norm > 0.0) {
    for (double& x : v) x /= norm;
  }
  return v;
}

}  // namespace detail

// L2 distance between unit-normalized embeddings; 0 for identical frames.
inline double perceptual_distance(const Frame& a, const Frame& b,
                                  const FeatureExtractor& extractor) {
  std::vector<double> ea, eb;
  try {
    ea = detail::unit_normalize(extractor.embed(a));
    eb = detail::unit_normalize(extractor.embed(b));
  } catch (const std::exception& e) {
    throw NumericalError("perceptual_distance: extractor '" + extractor.name() +
                         "' failed: " + e.what());
  }
  if (ea.size() != eb.size()) {
    throw NumericalError("perceptual_distance: extractor '" + extractor.name() +
                         "' returned inconsistent dimensions");
  }
  double sq = 0.0;
  for (std::size_t i = 0; i < ea.size(); ++i) {
    const double d = ea[i] - eb[i];
    sq += d * d;
  }
  return std::sqrt(sq);
}

}  // namespace crossview
