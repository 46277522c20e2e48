#include <gtest/gtest.h>

#include <numeric>
#include <random>

#include "costot/error.hpp"
#include "costot/metrics.hpp"
#include "support/instances.hpp"

using namespace costot;
using costot::testing::reference_ious;

TEST(Confusion, IdentityIsDiagonal) {
  const std::vector<int> x{0, 1, 2, 2, 1, 0, 1};
  const auto cm = confusion(x, x, 3);
  for (std::size_t g = 0; g < 3; ++g) {
    for (std::size_t p = 0; p < 3; ++p) {
      if (g != p) EXPECT_EQ(cm.at(g, p), 0u);
    }
  }
  EXPECT_EQ(cm.at(1, 1), 3u);
  EXPECT_EQ(cm.total(), x.size());
  EXPECT_EQ(miou(cm).miou, 1.0);
}

TEST(Confusion, AllPredictedZero) {
  const std::vector<int> labels{0, 1, 0, 1};
  const std::vector<int> preds{0, 0, 0, 0};
  const auto cm = confusion(labels, preds, 2);
  EXPECT_EQ(cm.at(0, 0), 2u);
  EXPECT_EQ(cm.at(0, 1), 0u);
  EXPECT_EQ(cm.at(1, 0), 2u);
  EXPECT_EQ(cm.at(1, 1), 0u);
  const auto r = miou(cm);
  EXPECT_EQ(r.miou, 0.25);
  EXPECT_EQ(*r.per_class_iou[0], 0.5);
  EXPECT_EQ(*r.per_class_iou[1], 0.0);
}

TEST(Confusion, HandBuiltThreeByThree) {
  // 3x3 grid, two mistakes: pixel 2 (truth 0) -> 1, pixel 7 (truth 2) -> 0.
  const std::vector<int> labels{0, 0, 0, 1, 1, 1, 2, 2, 2};
  const std::vector<int> preds{0, 0, 1, 1, 1, 1, 2, 0, 2};
  const auto cm = confusion(labels, preds, 3);
  const std::uint64_t expected[3][3] = {{2, 1, 0}, {0, 3, 0}, {1, 0, 2}};
  for (std::size_t g = 0; g < 3; ++g) {
    for (std::size_t p = 0; p < 3; ++p) EXPECT_EQ(cm.at(g, p), expected[g][p]) << g << "," << p;
  }
  // IoU: 2/4, 3/4, 2/3.
  const auto r = miou(cm);
  EXPECT_EQ(*r.per_class_iou[0], 0.5);
  EXPECT_EQ(*r.per_class_iou[1], 0.75);
  EXPECT_EQ(*r.per_class_iou[2], 2.0 / 3.0);
  EXPECT_EQ(r.miou, (0.5 + 0.75 + 2.0 / 3.0) / 3.0);
}

TEST(Miou, ZeroUnionPolicies) {
  ConfusionMatrix cm(3);
  cm.add(0, 0, 3);
  cm.add(1, 0, 1);
  const auto ex = miou(cm);
  EXPECT_FALSE(ex.per_class_iou[2].has_value());
  EXPECT_EQ(ex.miou, (0.75 + 0.0) / 2.0);
  const auto zero = miou(cm, ZeroUnionPolicy::count_as_zero);
  EXPECT_EQ(*zero.per_class_iou[2], 0.0);
  EXPECT_EQ(zero.miou, 0.75 / 3.0);
}

TEST(Miou, AllEmptyThrows) {
  try {
    miou(ConfusionMatrix(2));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::all_empty);
  }
}

TEST(Confusion, Errors) {
  const std::vector<int> a{0, 1};
  const std::vector<int> b{0, 2};
  const std::vector<int> c{0};
  const std::vector<int> neg{-1, 0};
  EXPECT_THROW(confusion(a, b, 2), Error);
  EXPECT_THROW(confusion(a, c, 2), Error);
  EXPECT_THROW(confusion(neg, a, 2), Error);
}

TEST(MetricProperties, MatchesPixelSetReference) {
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 2 + static_cast<int>(rng() % 6);
    std::vector<int> labels(1 + rng() % 80), preds(labels.size());
    for (auto& x : labels) x = static_cast<int>(rng() % n);
    for (auto& x : preds) x = static_cast<int>(rng() % n);
    const auto r = miou(confusion(labels, preds, static_cast<std::size_t>(n)));
    const auto ref = reference_ious(labels, preds, n);
    const double mean = std::accumulate(ref.begin(), ref.end(), 0.0) / static_cast<double>(ref.size());
    EXPECT_NEAR(r.miou, mean, 1e-15);
    EXPECT_GE(r.miou, 0.0);
    EXPECT_LE(r.miou, 1.0);
  }
}

TEST(MetricProperties, InvariantUnderClassPermutation) {
  std::mt19937_64 rng(42);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 2 + static_cast<int>(rng() % 6);
    std::vector<int> labels(64), preds(64);
    for (auto& x : labels) x = static_cast<int>(rng() % n);
    for (auto& x : preds) x = static_cast<int>(rng() % n);
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<int> pl(64), pp(64);
    for (std::size_t i = 0; i < 64; ++i) {
      pl[i] = perm[labels[i]];
      pp[i] = perm[preds[i]];
    }
    EXPECT_NEAR(miou(confusion(labels, preds, n)).miou, miou(confusion(pl, pp, n)).miou, 1e-14);
  }
}

TEST(MetricProperties, MergingDisjointPartsMatchesWhole) {
  std::mt19937_64 rng(43);
  std::vector<int> labels(100), preds(100);
  for (auto& x : labels) x = static_cast<int>(rng() % 4);
  for (auto& x : preds) x = static_cast<int>(rng() % 4);
  const std::span<const int> l(labels), p(preds);
  auto left = confusion(l.first(37), p.first(37), 4);
  left += confusion(l.subspan(37), p.subspan(37), 4);
  EXPECT_EQ(left, confusion(labels, preds, 4));
}
