#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>

#include "oracles.hpp"
#include "rpgcn/rptree.hpp"
#include "test_support.hpp"

using namespace rpgcn;

namespace {

// Checks disjointness, completeness and the leaf size bound.
void expect_partition(const RpTree& tree, std::size_t n, std::size_t max_leaf) {
  std::vector<int> seen(n, 0);
  for (const auto& node : tree.nodes()) {
    if (const auto* leaf = std::get_if<RpLeaf>(&node)) {
      EXPECT_GE(leaf->indices.size(), 1u);
      if (!leaf->unsplittable) {
        EXPECT_LE(leaf->indices.size(), max_leaf);
      }
    } else {
      const auto& in = std::get<RpInternal>(node);
      double norm = 0.0;
      for (double v : in.direction) norm += v * v;
      EXPECT_NEAR(std::sqrt(norm), 1.0, 1e-12);
    }
  }
  for (const auto& leaf : tree.leaves())
    for (auto i : leaf) {
      ASSERT_LT(i, n);
      ++seen[i];
    }
  for (std::size_t i = 0; i < n; ++i) EXPECT_EQ(seen[i], 1) << "index " << i;
}

}  // namespace

TEST(Project, AxisDirections) {
  const Matrix x{{1, 2}, {-3, 4}, {5, -6}};
  const std::vector<std::size_t> idx{0, 1, 2};
  EXPECT_EQ(project(x, idx, std::vector<double>{1, 0}), (std::vector<double>{1, -3, 5}));
  EXPECT_EQ(project(x, idx, std::vector<double>{-1, 0}), (std::vector<double>{-1, 3, -5}));
}

TEST(Project, MatchesDotProducts) {
  std::mt19937_64 gen(8);
  const auto x = oracle::random_matrix(5, 3, gen);
  std::vector<double> dir{0.3, -0.5, std::sqrt(1.0 - 0.09 - 0.25)};
  const std::vector<std::size_t> idx{4, 0, 2};
  const auto got = project(x, idx, dir);
  for (std::size_t k = 0; k < idx.size(); ++k) {
    EXPECT_EQ(got[k], x(idx[k], 0) * dir[0] + x(idx[k], 1) * dir[1] + x(idx[k], 2) * dir[2]);
  }
}

TEST(Project, DimensionMismatch) {
  const Matrix x(3, 2, 1.0);
  const std::vector<std::size_t> idx{0};
  EXPECT_RPGCN_ERROR(DimensionMismatch, project(x, idx, std::vector<double>{1, 0, 0}));
}

TEST(BuildTree, NoSplitWhenAtCapacity) {
  std::mt19937_64 gen(1);
  const auto x = oracle::random_matrix(5, 2, gen);
  const auto tree = build_tree(x, 5, 123);
  const auto leaves = tree.leaves();
  ASSERT_EQ(leaves.size(), 1u);
  EXPECT_EQ(leaves[0], (std::vector<std::size_t>{0, 1, 2, 3, 4}));
}

TEST(BuildTree, EightPointsSplitOnceIntoTwoLeaves) {
  const Matrix x{{0, 0}, {1, 0}, {2, 0.5}, {3, 1}, {0, 2}, {1, 3}, {2, 2.5}, {3.5, 3}};
  constexpr std::uint64_t seed = 2024;
  const auto tree = build_tree(x, 4, seed);

  // Replay the root draw: unit normal direction, quantile in [1/4, 3/4].
  Rng rng(derive_seed(seed, 1));
  std::vector<double> dir(2);
  for (auto& v : dir) v = rng.normal();
  const double norm = std::hypot(dir[0], dir[1]);
  for (auto& v : dir) v /= norm;
  const double q = rng.uniform(0.25, 0.75);
  std::vector<double> proj(8);
  for (std::size_t i = 0; i < 8; ++i) proj[i] = x(i, 0) * dir[0] + x(i, 1) * dir[1];
  auto sorted = proj;
  std::sort(sorted.begin(), sorted.end());
  const double pos = q * 7.0;
  const auto lo = static_cast<std::size_t>(pos);
  const double threshold = sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[lo + 1] - sorted[lo]);
  std::vector<std::size_t> left, right;
  for (std::size_t i = 0; i < 8; ++i) (proj[i] <= threshold ? left : right).push_back(i);

  const auto& root = std::get<RpInternal>(tree.root());
  EXPECT_NEAR(root.threshold, threshold, 1e-15);
  EXPECT_NEAR(root.direction[0], dir[0], 1e-15);

  // With q in [1/4, 3/4] of 8 points each side holds at least 2.
  ASSERT_GE(left.size(), 2u);
  ASSERT_GE(right.size(), 2u);
  const auto leaves = tree.leaves();
  if (left.size() <= 4 && right.size() <= 4) {
    ASSERT_EQ(leaves.size(), 2u);
    EXPECT_EQ(leaves[0], left);
    EXPECT_EQ(leaves[1], right);
  }
  expect_partition(tree, 8, 4);
}

TEST(BuildTree, EightPointsAlwaysGiveChildrenOfAtLeastTwo) {
  std::mt19937_64 gen(77);
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const auto x = oracle::random_matrix(8, 3, gen);
    const auto tree = build_tree(x, 4, seed);
    const auto& root = std::get<RpInternal>(tree.root());
    const auto count_leaves = [&](std::size_t id) {
      std::size_t total = 0;
      std::vector<std::size_t> stack{id};
      while (!stack.empty()) {
        const auto k = stack.back();
        stack.pop_back();
        if (const auto* in = std::get_if<RpInternal>(&tree.nodes()[k])) {
          stack.push_back(in->left);
          stack.push_back(in->right);
        } else {
          total += std::get<RpLeaf>(tree.nodes()[k]).indices.size();
        }
      }
      return total;
    };
    EXPECT_GE(count_leaves(root.left), 2u);
    EXPECT_GE(count_leaves(root.right), 2u);
  }
}

TEST(BuildTree, DuplicatePointsTerminateAsUnsplittable) {
  const Matrix x(10, 3, 1.5);
  const auto tree = build_tree(x, 2, 9);
  const auto leaves = tree.leaves();
  ASSERT_EQ(leaves.size(), 1u);
  EXPECT_EQ(leaves[0].size(), 10u);
  EXPECT_TRUE(std::get<RpLeaf>(tree.root()).unsplittable);
}

TEST(BuildTree, PartlyDuplicatedPointsStillPartition) {
  Matrix x(12, 2, 0.0);
  for (std::size_t i = 6; i < 12; ++i) x(i, 0) = static_cast<double>(i);
  for (auto rule : {SplitRule::Quantile, SplitRule::Range, SplitRule::Median}) {
    const auto tree = build_tree(x, 2, 4, rule);
    expect_partition(tree, 12, 2);
  }
}

TEST(BuildTree, TiesAtTheMaximumNeverEmptyTheRightChild) {
  // Seven copies of the largest value; a high quantile lands on the tie.
  Matrix x(9, 1, 5.0);
  x(0, 0) = 0.0;
  x(1, 0) = 1.0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto tree = build_tree(x, 3, seed);
    expect_partition(tree, 9, 3);
  }
}

class PartitionProperty : public ::testing::TestWithParam<std::uint64_t> {};

TEST_P(PartitionProperty, LeavesAreDisjointCompleteAndBounded) {
  std::mt19937_64 gen(GetParam());
  std::uniform_int_distribution<std::size_t> n_dist(1, 300), d_dist(1, 8), leaf_dist(1, 25);
  for (int rep = 0; rep < 10; ++rep) {
    const auto n = n_dist(gen);
    const auto x = oracle::random_matrix(n, d_dist(gen), gen);
    const auto leaf = leaf_dist(gen);
    for (auto rule : {SplitRule::Quantile, SplitRule::Range, SplitRule::Median}) {
      expect_partition(build_tree(x, leaf, gen(), rule), n, leaf);
    }
  }
}

INSTANTIATE_TEST_SUITE_P(Seeds, PartitionProperty, ::testing::Range<std::uint64_t>(0, 8));

TEST(BuildTree, DeterministicGivenSeed) {
  std::mt19937_64 gen(3);
  const auto x = oracle::random_matrix(120, 4, gen);
  EXPECT_TRUE(build_tree(x, 10, 55) == build_tree(x, 10, 55));
  EXPECT_FALSE(build_tree(x, 10, 55) == build_tree(x, 10, 56));
}

TEST(BuildTree, RotatedDataKeepsInvariants) {
  std::mt19937_64 gen(21);
  const auto x = oracle::random_matrix(150, 2, gen);
  const double c = std::cos(0.7), s = std::sin(0.7);
  Matrix rotated(150, 2);
  for (std::size_t i = 0; i < 150; ++i) {
    rotated(i, 0) = c * x(i, 0) - s * x(i, 1);
    rotated(i, 1) = s * x(i, 0) + c * x(i, 1);
  }
  for (std::uint64_t seed = 0; seed < 10; ++seed) expect_partition(build_tree(rotated, 7, seed), 150, 7);
}

TEST(BuildTree, InvalidArguments) {
  EXPECT_RPGCN_ERROR(InvalidArgument, build_tree(Matrix(0, 2), 3, 1));
  EXPECT_RPGCN_ERROR(InvalidArgument, build_tree(Matrix(4, 2, 1.0), 0, 1));
}

TEST(SplitRule, ParsesNames) {
  EXPECT_EQ(parse_split_rule("quantile"), SplitRule::Quantile);
  EXPECT_EQ(parse_split_rule("range"), SplitRule::Range);
  EXPECT_EQ(parse_split_rule("median"), SplitRule::Median);
  EXPECT_STREQ(to_string(SplitRule::Range), "range");
  EXPECT_RPGCN_ERROR(InvalidArgument, parse_split_rule("mean"));
}

TEST(SplitRule, MedianSplitsEvenCountsInHalf) {
  std::mt19937_64 gen(4);
  const auto x = oracle::random_matrix(64, 3, gen);
  const auto tree = build_tree(x, 8, 1, SplitRule::Median);
  for (const auto& leaf : tree.leaves()) EXPECT_EQ(leaf.size(), 8u);
}
