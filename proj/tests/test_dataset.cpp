#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "rpgcn/dataset.hpp"
#include "test_support.hpp"

using namespace rpgcn;

TEST(GenRings, ZeroNoisePointsLieOnTheCircle) {
  const auto ds = gen_rings({{1.0, 4, 0.0}}, std::nullopt, 3);
  ASSERT_EQ(ds.size(), 4u);
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_NEAR(std::hypot(ds.x(i, 0), ds.x(i, 1)), 1.0, 1e-12);
    EXPECT_EQ(ds.labels[i], 0);
  }
}

TEST(GenRings, TwoRingsHaveRequestedCounts) {
  const auto ds = gen_rings({{1.0, 100, 0.1}, {3.0, 138, 0.1}}, std::nullopt, 7);
  EXPECT_EQ(ds.size(), 238u);
  EXPECT_EQ(ds.num_classes(), 2);
  EXPECT_EQ(std::count(ds.labels.begin(), ds.labels.end(), 0), 100);
  EXPECT_EQ(std::count(ds.labels.begin(), ds.labels.end(), 1), 138);
}

TEST(GenRings, ZeroNoiseRadiusHoldsForEveryRing) {
  const auto ds = gen_rings({{0.5, 30, 0.0}, {2.0, 40, 0.0}, {7.5, 50, 0.0}}, std::nullopt, 99);
  const double radii[] = {0.5, 2.0, 7.5};
  for (std::size_t i = 0; i < ds.size(); ++i) {
    EXPECT_NEAR(std::hypot(ds.x(i, 0), ds.x(i, 1)), radii[ds.labels[i]], 1e-12);
  }
}

TEST(GenRings, CenterBlobIsLastClass) {
  const auto ds = gen_rings({{2.0, 10, 0.0}}, BlobSpec{5, 0.1}, 1);
  EXPECT_EQ(ds.size(), 15u);
  EXPECT_EQ(ds.num_classes(), 2);
  EXPECT_EQ(std::count(ds.labels.begin(), ds.labels.end(), 1), 5);
}

TEST(GenRings, Errors) {
  EXPECT_RPGCN_ERROR(InvalidArgument, gen_rings({}, std::nullopt, 1));
  EXPECT_RPGCN_ERROR(InvalidArgument, gen_rings({{1.0, 0, 0.1}}, std::nullopt, 1));
  EXPECT_RPGCN_ERROR(InvalidArgument, gen_rings({{1.0, 3, -0.1}}, std::nullopt, 1));
}

TEST(GenRings, DeterministicPerSeed) {
  const auto a = gen_rings({{1.0, 50, 0.2}}, std::nullopt, 5);
  const auto b = gen_rings({{1.0, 50, 0.2}}, std::nullopt, 5);
  const auto c = gen_rings({{1.0, 50, 0.2}}, std::nullopt, 6);
  EXPECT_EQ(a.x, b.x);
  EXPECT_FALSE(a.x == c.x);
}

TEST(GenClusters, ZeroSpreadCollapsesToCenter) {
  const auto ds = gen_clusters({{2.5, -1.0, 6, 0.0}}, 4);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    EXPECT_EQ(ds.x(i, 0), 2.5);
    EXPECT_EQ(ds.x(i, 1), -1.0);
  }
}

TEST(GenClusters, SizesAndSeeds) {
  const std::vector<ClusterSpec> spec{{0, 0, 101, 1}, {4, 0, 101, 1}, {2, 3.5, 101, 1}};
  const auto a = gen_clusters(spec, 1);
  const auto b = gen_clusters(spec, 2);
  EXPECT_EQ(a.size(), 303u);
  EXPECT_FALSE(a.x == b.x);
  EXPECT_EQ(a.labels, b.labels);
  EXPECT_EQ(gen_clusters(spec, 1).x, a.x);
  EXPECT_RPGCN_ERROR(InvalidArgument, gen_clusters({}, 1));
}

TEST(Presets, SizesFollowNames) {
  EXPECT_EQ(make_preset("ring238", 0).size(), 238u);
  EXPECT_EQ(make_preset("3rings299", 0).size(), 299u);
  EXPECT_EQ(make_preset("sparse303", 0).size(), 303u);
  EXPECT_EQ(make_preset("sparse622", 0).size(), 622u);
  EXPECT_EQ(make_preset("3rings299", 0).num_classes(), 3);
  EXPECT_RPGCN_ERROR(InvalidArgument, make_preset("nope", 0));
}

TEST(LoadCsv, EncodesLabelsByFirstAppearance) {
  TempDir dir;
  const auto path = dir.write("toy.csv", "x,y,label\n1,2,a\n3,4,b\n5,6,a\n");
  const auto ds = load_csv(path, "label");
  EXPECT_EQ(ds.name, "toy");
  EXPECT_EQ(ds.size(), 3u);
  EXPECT_EQ(ds.dims(), 2u);
  EXPECT_EQ(ds.labels, (std::vector<int>{0, 1, 0}));
  EXPECT_EQ(ds.x(2, 1), 6.0);
}

TEST(LoadCsv, LabelColumnMayBeAnywhere) {
  TempDir dir;
  const auto path = dir.write("mid.csv", "f0,class,f1\n1.5,z,-2\n0,y,1e3\n");
  const auto ds = load_csv(path, "class");
  EXPECT_EQ(ds.x, (Matrix{{1.5, -2}, {0, 1000}}));
  EXPECT_EQ(ds.labels, (std::vector<int>{0, 1}));
}

TEST(LoadCsv, NanCellNamesRowAndColumn) {
  TempDir dir;
  const auto path = dir.write("bad.csv", "f0,f1,label\n1,2,a\n3,nan,b\n");
  try {
    load_csv(path, "label");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Parse);
    const std::string msg = e.what();
    EXPECT_NE(msg.find("row 2"), std::string::npos) << msg;
    EXPECT_NE(msg.find("f1"), std::string::npos) << msg;
  }
}

TEST(LoadCsv, Errors) {
  TempDir dir;
  EXPECT_RPGCN_ERROR(Io, load_csv(dir.file("missing.csv"), "label"));
  EXPECT_RPGCN_ERROR(Parse, load_csv(dir.write("a.csv", "f0,label\nabc,a\n1,b\n"), "label"));
  EXPECT_RPGCN_ERROR(InvalidArgument, load_csv(dir.write("b.csv", "f0,label\n1,a\n2,a\n"), "label"));
  EXPECT_RPGCN_ERROR(Parse, load_csv(dir.write("c.csv", "f0,label\n1,a\n2,b\n"), "target"));
  EXPECT_RPGCN_ERROR(Parse, load_csv(dir.write("d.csv", "f0,label\n1,a,3\n2,b\n"), "label"));
}

TEST(LoadCsv, ShippedIrisHasStandardShape) {
  const auto ds = load_csv(std::string(RPGCN_DATA_DIR) + "/iris.csv", "label");
  EXPECT_EQ(ds.size(), 150u);
  EXPECT_EQ(ds.dims(), 4u);
  EXPECT_EQ(ds.num_classes(), 3);
}

TEST(Standardize, ZeroMeanUnitSd) {
  Dataset ds{"s", Matrix{{1, 5}, {2, 5}, {3, 5}, {6, 5}}, {0, 0, 1, 1}};
  standardize(ds);
  double mean = 0, sq = 0;
  for (std::size_t i = 0; i < 4; ++i) {
    mean += ds.x(i, 0);
    sq += ds.x(i, 0) * ds.x(i, 0);
    EXPECT_EQ(ds.x(i, 1), 0.0);
  }
  EXPECT_NEAR(mean, 0.0, 1e-12);
  EXPECT_NEAR(sq / 4, 1.0, 1e-12);
}

namespace {

std::vector<int> cyclic_labels(std::size_t n, int c) {
  std::vector<int> y(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = static_cast<int>(i % static_cast<std::size_t>(c));
  return y;
}

}  // namespace

TEST(SplitMasks, EmptyTestSetIsAnError) {
  EXPECT_RPGCN_ERROR(InvalidArgument, split_masks(10, 10, 0, cyclic_labels(10, 2), 1));
}

TEST(SplitMasks, TooFewTrainNodesForClassesIsAnError) {
  EXPECT_RPGCN_ERROR(InvalidArgument, split_masks(30, 2, 5, cyclic_labels(30, 3), 1));
}

TEST(SplitMasks, DeterministicAndPartitioning) {
  const auto labels = cyclic_labels(150, 3);
  const auto a = split_masks(150, 10, 20, labels, 42);
  const auto b = split_masks(150, 10, 20, labels, 42);
  EXPECT_EQ(a.train, b.train);
  EXPECT_EQ(a.val, b.val);
  EXPECT_EQ(a.test, b.test);
  EXPECT_EQ(a.train.size(), 10u);
  EXPECT_EQ(a.val.size(), 20u);
  EXPECT_EQ(a.test.size(), 120u);
  std::set<std::size_t> all(a.train.begin(), a.train.end());
  all.insert(a.val.begin(), a.val.end());
  all.insert(a.test.begin(), a.test.end());
  EXPECT_EQ(all.size(), 150u);
  const auto c = split_masks(150, 10, 20, labels, 43);
  EXPECT_NE(a.train, c.train);
}

TEST(SplitMasks, EveryClassAppearsInTrain) {
  std::vector<int> labels(100, 0);
  labels[7] = 1;
  labels[50] = 2;
  labels[51] = 2;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto m = split_masks(100, 3, 10, labels, seed);
    std::set<int> seen;
    for (auto i : m.train) seen.insert(labels[i]);
    EXPECT_EQ(seen.size(), 3u);
  }
}
