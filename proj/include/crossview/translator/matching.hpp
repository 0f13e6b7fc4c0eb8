#pragma once

#include <array>
#include <limits>
#include <vector>

#include "crossview/core/errors.hpp"
#include "crossview/data/layout.hpp"
#include "crossview/nn/graph.hpp"

namespace crossview {

// Minimum-cost injective assignment of rows to columns for an n×m cost matrix
// with n ≤ m, via the Jonker-Volgenant shortest-augmenting-path formulation
// (O(n²m)). Returns, for each row, its assigned column. Deterministic: ties in
// the path search resolve to the lowest column index, so equal-cost optima are
// chosen reproducibly.
inline std::vector<int> hungarian_assign(const Mat<double>& cost) {
  const int n = static_cast<int>(cost.rows());
  const int m = static_cast<int>(cost.cols());
  if (n == 0) return {};
  if (n > m) throw InputDomainError("hungarian_assign: more rows than columns");
  const double kInf = std::numeric_limits<double>::infinity();
  // 1-indexed potentials and matching, per the classic formulation.
  std::vector<double> u(static_cast<std::size_t>(n) + 1, 0.0);
  std::vector<double> v(static_cast<std::size_t>(m) + 1, 0.0);
  std::vector<int> match(static_cast<std::size_t>(m) + 1, 0);  // column -> row
  std::vector<int> way(static_cast<std::size_t>(m) + 1, 0);
  for (int i = 1; i <= n; ++i) {
    match[0] = i;
    int j0 = 0;
    std::vector<double> min_slack(static_cast<std::size_t>(m) + 1, kInf);
    std::vector<char> used(static_cast<std::size_t>(m) + 1, 0);
    do {
      used[static_cast<std::size_t>(j0)] = 1;
      const int i0 = match[static_cast<std::size_t>(j0)];
      double delta = kInf;
      int j1 = -1;
      for (int j = 1; j <= m; ++j) {
        if (used[static_cast<std::size_t>(j)]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[static_cast<std::size_t>(i0)] -
                           v[static_cast<std::size_t>(j)];
        if (cur < min_slack[static_cast<std::size_t>(j)]) {
          min_slack[static_cast<std::size_t>(j)] = cur;
          way[static_cast<std::size_t>(j)] = j0;
        }
        if (min_slack[static_cast<std::size_t>(j)] < delta) {
          delta = min_slack[static_cast<std::size_t>(j)];
          j1 = j;
        }
      }
      for (int j = 0; j <= m; ++j) {
        if (used[static_cast<std::size_t>(j)]) {
          u[static_cast<std::size_t>(match[static_cast<std::size_t>(j)])] += delta;
          v[static_cast<std::size_t>(j)] -= delta;
        } else {
          min_slack[static_cast<std::size_t>(j)] -= delta;
        }
      }
      j0 = j1;
    } while (match[static_cast<std::size_t>(j0)] != 0);
    do {
      const int j1 = way[static_cast<std::size_t>(j0)];
      match[static_cast<std::size_t>(j0)] = match[static_cast<std::size_t>(j1)];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> assign(static_cast<std::size_t>(n), -1);
  for (int j = 1; j <= m; ++j) {
    if (match[static_cast<std::size_t>(j)] != 0) {
      assign[static_cast<std::size_t>(match[static_cast<std::size_t>(j)] - 1)] = j - 1;
    }
  }
  return assign;
}

struct MatchResult {
  double loss = 0.0;
  // Visible ground-truth joints in (hand-major, joint-index) order, paired
  // with the prediction row each one matched to.
  std::vector<std::array<double, 2>> gt;
  std::vector<int> pred_index;
};

// L1 bipartite matching loss: cost(g,p) = |Δu| + |Δv| over visible GT joints
// versus the E predicted joints; the Hungarian optimum is the assignment and
// the loss is the mean matched pair cost. No visible joints → loss 0, empty
// assignment. All arithmetic in double.
inline MatchResult bipartite_match_loss(const Mat<double>& pred, const PoseLayout& layout) {
  if (pred.cols() != 2) throw InputDomainError("bipartite_match_loss: predictions must be E×2");
  MatchResult result;
  for (const auto& hand : layout.hands) {
    for (std::size_t j = 0; j < hand.joints.size(); ++j) {
      if (hand.visible[j]) result.gt.push_back(hand.joints[j]);
    }
  }
  const int n = static_cast<int>(result.gt.size());
  if (n == 0) return result;
  if (n > pred.rows()) {
    throw InputDomainError("bipartite_match_loss: more visible joints than predictions");
  }
  Mat<double> cost(n, pred.rows());
  for (int g = 0; g < n; ++g) {
    for (Eigen::Index p = 0; p < pred.rows(); ++p) {
      cost(g, p) = std::abs(pred(p, 0) - result.gt[static_cast<std::size_t>(g)][0]) +
                   std::abs(pred(p, 1) - result.gt[static_cast<std::size_t>(g)][1]);
    }
  }
  result.pred_index = hungarian_assign(cost);
  double total = 0.0;
  for (int g = 0; g < n; ++g) total += cost(g, result.pred_index[static_cast<std::size_t>(g)]);
  result.loss = total / n;
  return result;
}

}  // namespace crossview
