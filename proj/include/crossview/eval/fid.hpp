#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "crossview/core/errors.hpp"
#include "crossview/core/tensor3.hpp"
#include "crossview/eval/perceptual.hpp"

namespace crossview {

struct GaussianMoments {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
  int count = 0;
};

// Sample mean and (n−1)-normalized covariance of a set of embeddings. When
// the set is too small for a full-rank covariance (n < F+1), the covariance
// is regularized with +1e-6·I.
inline GaussianMoments fit_moments(const std::vector<std::vector<double>>& embeddings) {
  if (embeddings.empty()) throw InputDomainError("fit_moments: empty embedding set");
  const int f = static_cast<int>(embeddings.front().size());
  const int n = static_cast<int>(embeddings.size());
  GaussianMoments m;
  m.count = n;
  m.mean = Eigen::VectorXd::Zero(f);
  for (const auto& e : embeddings) {
    if (static_cast<int>(e.size()) != f) {
      throw InputDomainError("fit_moments: ragged embedding dimensions");
    }
    for (int i = 0; i < f; ++i) m.mean(i) += e[static_cast<std::size_t>(i)];
  }
  m.mean /= static_cast<double>(n);
  m.cov = Eigen::MatrixXd::Zero(f, f);
  if (n > 1) {
    for (const auto& e : embeddings) {
      Eigen::VectorXd d(f);
      for (int i = 0; i < f; ++i) d(i) = e[static_cast<std::size_t>(i)] - m.mean(i);
      m.cov.noalias() += d * d.transpose();
    }
    m.cov /= static_cast<double>(n - 1);
  }
  if (n < f + 1) {
    m.cov += 1e-6 * Eigen::MatrixXd::Identity(f, f);
  }
  return m;
}

namespace detail {

// Symmetric PSD square root by eigendecomposition; tiny negative eigenvalues
// (numerical noise) clamp to zero, genuinely negative ones are an error.
inline Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& m, const char* what) {
  const Eigen::MatrixXd sym = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sym);
  if (solver.info() != Eigen::Success) {
    throw NumericalError(std::string("fid: eigendecomposition failed for ") + what);
  }
  Eigen::VectorXd eig = solver.eigenvalues();
  const double max_eig = std::max(eig.maxCoeff(), 0.0);
  const double tol = -1e-8 * std::max(max_eig, 1.0);
  for (Eigen::Index i = 0; i < eig.size(); ++i) {
    if (eig(i) < tol) {
      throw NumericalError(std::string("fid: matrix not PSD for ") + what +
                           " (min eigenvalue " + std::to_string(eig(i)) + ", max " +
                           std::to_string(max_eig) + ")");
    }
    eig(i) = std::sqrt(std::max(eig(i), 0.0));
  }
  return solver.eigenvectors() * eig.asDiagonal() * solver.eigenvectors().transpose();
}

}  // namespace detail

// Fréchet distance between two Gaussians:
//   ‖μa − μb‖² + tr(Σa) + tr(Σb) − 2·tr((Σa Σb)^{1/2}),
// with tr((Σa Σb)^{1/2}) evaluated through the symmetric product
// Σb^{1/2} Σa Σb^{1/2}. Result clamps at 0.
inline double fid_from_moments(const GaussianMoments& a, const GaussianMoments& b) {
  if (a.mean.size() != b.mean.size()) {
    throw InputDomainError("fid_from_moments: dimension mismatch");
  }
  const double mean_term = (a.mean - b.mean).squaredNorm();
  const Eigen::MatrixXd sqrt_b = detail::psd_sqrt(b.cov, "covariance");
  const Eigen::MatrixXd inner = sqrt_b * a.cov * sqrt_b;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(0.5 * (inner + inner.transpose()));
  if (solver.info() != Eigen::Success) {
    throw NumericalError("fid: eigendecomposition failed for cross term");
  }
  double trace_sqrt = 0.0;
  for (Eigen::Index i = 0; i < solver.eigenvalues().size(); ++i) {
    trace_sqrt += std::sqrt(std::max(solver.eigenvalues()(i), 0.0));
  }
  const double value = mean_term + a.cov.trace() + b.cov.trace() - 2.0 * trace_sqrt;
  return std::max(value, 0.0);
}

// FID between two frame sets under one extractor.
inline double fid(const std::vector<Frame>& set_a, const std::vector<Frame>& set_b,
                  const FeatureExtractor& extractor) {
  if (set_a.empty() || set_b.empty()) throw InputDomainError("fid: empty frame set");
  auto embed_all = [&extractor](const std::vector<Frame>& frames) {
    std::vector<std::vector<double>> out;
    out.reserve(frames.size());
    for (const auto& f : frames) out.push_back(extractor.embed(f));
    return out;
  };
  return fid_from_moments(fit_moments(embed_all(set_a)), fit_moments(embed_all(set_b)));
}

}  // namespace crossview
