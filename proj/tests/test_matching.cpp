// Hungarian assignment against brute force, and the matched-L1 pose loss.

#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <vector>

#include "crossview/core/rng.hpp"
#include "crossview/translator/matching.hpp"
#include "crossview/translator/model.hpp"

using namespace crossview;

namespace {

using Matd = Mat<double>;

// Exhaustive minimum over all injective row→column maps. Costs quantized to a
// k/64 grid make optimal sums exactly comparable in double.
double brute_force_min(const Matd& cost) {
  const int n = static_cast<int>(cost.rows());
  const int m = static_cast<int>(cost.cols());
  std::vector<int> cols(static_cast<std::size_t>(m));
  std::iota(cols.begin(), cols.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  // Permute all m columns; the first n positions define the assignment, so
  // every injective map appears (many times — fine for these sizes).
  std::sort(cols.begin(), cols.end());
  do {
    double total = 0.0;
    for (int r = 0; r < n; ++r) total += cost(r, cols[static_cast<std::size_t>(r)]);
    best = std::min(best, total);
  } while (std::next_permutation(cols.begin(), cols.end()));
  return best;
}

Matd grid_cost(int n, int m, Rng& rng) {
  Matd cost(n, m);
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < m; ++c) {
      cost(r, c) = static_cast<double>(rng.uniform_index(64)) / 64.0;
    }
  }
  return cost;
}

}  // namespace

TEST(Hungarian, MatchesBruteForceOnRandomGrids) {
  Rng rng(77);
  for (int trial = 0; trial < 2000; ++trial) {
    const int m = 1 + static_cast<int>(rng.uniform_index(6));
    const int n = 1 + static_cast<int>(rng.uniform_index(static_cast<std::size_t>(m)));
    const Matd cost = grid_cost(n, m, rng);
    const auto assign = hungarian_assign(cost);
    ASSERT_EQ(assign.size(), static_cast<std::size_t>(n));
    // Injective and in range.
    std::vector<bool> used(static_cast<std::size_t>(m), false);
    double total = 0.0;
    for (int r = 0; r < n; ++r) {
      const int c = assign[static_cast<std::size_t>(r)];
      ASSERT_GE(c, 0);
      ASSERT_LT(c, m);
      ASSERT_FALSE(used[static_cast<std::size_t>(c)]);
      used[static_cast<std::size_t>(c)] = true;
      total += cost(r, c);
    }
    // Grid-quantized entries: optimal sums are exactly representable.
    EXPECT_EQ(total, brute_force_min(cost)) << "trial " << trial;
  }
}

TEST(Hungarian, EqualCostsPickLowestColumns) {
  const Matd cost = Matd::Constant(3, 5, 0.25);
  const auto assign = hungarian_assign(cost);
  EXPECT_EQ(assign, (std::vector<int>{0, 1, 2}));
}

TEST(Hungarian, Contracts) {
  EXPECT_TRUE(hungarian_assign(Matd(0, 4)).empty());
  EXPECT_THROW(hungarian_assign(Matd::Zero(3, 2)), InputDomainError);
}

TEST(MatchLoss, PermutedPerfectPredictionsScoreZero) {
  PoseLayout gt;
  gt.hands.push_back({{{0.1, 0.2}, {0.3, 0.4}, {0.5, 0.6}}, {true, true, true}});
  Matd pred(3, 2);
  pred << 0.5, 0.6, 0.1, 0.2, 0.3, 0.4;  // rows permuted
  const MatchResult res = bipartite_match_loss(pred, gt);
  EXPECT_EQ(res.loss, 0.0);
  EXPECT_EQ(res.pred_index, (std::vector<int>{1, 2, 0}));
}

TEST(MatchLoss, ExtraPredictionsAreFreeAndNearestWins) {
  PoseLayout gt;
  gt.hands.push_back({{{0.2, 0.2}}, {true}});
  Matd pred(2, 2);
  pred << 0.2, 0.2, 0.9, 0.9;
  const MatchResult res = bipartite_match_loss(pred, gt);
  EXPECT_EQ(res.loss, 0.0);
  EXPECT_EQ(res.pred_index, (std::vector<int>{0}));
}

TEST(MatchLoss, HandComputedTwoByTwo) {
  PoseLayout gt;
  gt.hands.push_back({{{0.0, 0.0}, {1.0, 1.0}}, {true, true}});
  Matd pred(2, 2);
  pred << 0.75, 0.75, 0.25, 0.25;
  // Assigning gt0→pred1 (cost 0.5) and gt1→pred0 (cost 0.5) beats the
  // identity pairing (1.5 + 1.5); loss is the matched mean = 0.5.
  const MatchResult res = bipartite_match_loss(pred, gt);
  EXPECT_EQ(res.pred_index, (std::vector<int>{1, 0}));
  EXPECT_NEAR(res.loss, 0.5, 1e-15);
}

TEST(MatchLoss, InvisibleJointsAreExcluded) {
  PoseLayout gt;
  gt.hands.push_back({{{0.1, 0.1}, {0.9, 0.9}}, {true, false}});
  gt.hands.push_back({{{0.5, 0.5}}, {true}});
  Matd pred(3, 2);
  pred << 0.5, 0.5, 0.1, 0.1, 0.0, 0.0;
  const MatchResult res = bipartite_match_loss(pred, gt);
  // Visible joints in hand-major order: (0.1,0.1) then (0.5,0.5).
  ASSERT_EQ(res.gt.size(), 2u);
  EXPECT_EQ(res.gt[0], (std::array<double, 2>{0.1, 0.1}));
  EXPECT_EQ(res.gt[1], (std::array<double, 2>{0.5, 0.5}));
  EXPECT_EQ(res.pred_index, (std::vector<int>{1, 0}));
  EXPECT_EQ(res.loss, 0.0);
}

TEST(MatchLoss, NoVisibleJointsGivesEmptyZero) {
  PoseLayout gt;
  gt.hands.push_back({{{0.5, 0.5}}, {false}});
  const MatchResult res = bipartite_match_loss(Matd::Zero(4, 2), gt);
  EXPECT_EQ(res.loss, 0.0);
  EXPECT_TRUE(res.pred_index.empty());
}

TEST(MatchLoss, Contracts) {
  PoseLayout gt;
  gt.hands.push_back({{{0.1, 0.1}, {0.2, 0.2}}, {true, true}});
  EXPECT_THROW(bipartite_match_loss(Matd::Zero(1, 2), gt), InputDomainError);  // E < visible
  EXPECT_THROW(bipartite_match_loss(Matd::Zero(4, 3), gt), InputDomainError);  // not E×2
}

TEST(MatchLoss, InvariantToGtAndPredOrder) {
  Rng rng(42);
  for (int trial = 0; trial < 200; ++trial) {
    const int joints = 2 + static_cast<int>(rng.uniform_index(4));
    PoseLayout gt;
    Hand hand;
    for (int j = 0; j < joints; ++j) {
      hand.joints.push_back({rng.uniform(), rng.uniform()});
      hand.visible.push_back(true);
    }
    gt.hands.push_back(hand);
    Matd pred(joints + 1, 2);
    for (Eigen::Index r = 0; r < pred.rows(); ++r) {
      pred(r, 0) = rng.uniform();
      pred(r, 1) = rng.uniform();
    }
    const double base = bipartite_match_loss(pred, gt).loss;

    // Shuffle GT joints within the hand.
    PoseLayout gt_shuffled = gt;
    for (std::size_t j = hand.joints.size(); j > 1; --j) {
      const std::size_t k = rng.uniform_index(j);
      std::swap(gt_shuffled.hands[0].joints[j - 1], gt_shuffled.hands[0].joints[k]);
    }
    EXPECT_NEAR(bipartite_match_loss(pred, gt_shuffled).loss, base, 1e-12);

    // Shuffle prediction rows.
    Matd pred_shuffled = pred;
    for (Eigen::Index r = pred.rows(); r > 1; --r) {
      const auto k = static_cast<Eigen::Index>(rng.uniform_index(static_cast<std::size_t>(r)));
      pred_shuffled.row(r - 1).swap(pred_shuffled.row(k));
    }
    EXPECT_NEAR(bipartite_match_loss(pred_shuffled, gt).loss, base, 1e-12);
  }
}

TEST(QueryOrder, VotesRecoverAConsistentPermutation) {
  // Simulated trained head: raw query q always predicts joint perm[q], with
  // small jitter. Calibration must recover exactly that permutation.
  Rng rng(99);
  const int joints = 6;
  const std::vector<int> perm = {3, 0, 5, 1, 4, 2};  // joint slot → raw row
  QueryOrderVotes votes(joints);
  for (int example = 0; example < 20; ++example) {
    PoseLayout gt;
    Hand hand;
    for (int j = 0; j < joints; ++j) {
      hand.joints.push_back({0.1 + 0.12 * j, 0.2 + 0.1 * ((j * 3) % joints)});
      hand.visible.push_back(true);
    }
    gt.hands.push_back(hand);
    Matd raw(joints, 2);
    for (int g = 0; g < joints; ++g) {
      raw(perm[static_cast<std::size_t>(g)], 0) =
          hand.joints[static_cast<std::size_t>(g)][0] + 0.004 * (rng.uniform() - 0.5);
      raw(perm[static_cast<std::size_t>(g)], 1) =
          hand.joints[static_cast<std::size_t>(g)][1] + 0.004 * (rng.uniform() - 0.5);
    }
    votes.add(raw, gt);
  }
  EXPECT_EQ(votes.examples(), 20);
  EXPECT_EQ(votes.resolve(), perm);
}

TEST(QueryOrder, PartialVisibilityExamplesAreSkipped) {
  QueryOrderVotes votes(3);
  PoseLayout gt;
  gt.hands.push_back({{{0.1, 0.1}, {0.5, 0.5}, {0.9, 0.9}}, {true, false, true}});
  votes.add(Matd::Zero(3, 2), gt);
  EXPECT_EQ(votes.examples(), 0);
  EXPECT_TRUE(votes.resolve().empty());
  EXPECT_THROW(votes.add(Matd::Zero(4, 2), gt), InputDomainError);
}
