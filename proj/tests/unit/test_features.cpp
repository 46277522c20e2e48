#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "costot/error.hpp"
#include "costot/features.hpp"
#include "support/instances.hpp"

using namespace costot;
using costot::testing::random_features;
using costot::testing::reference_cosine;

namespace {

FeatureSet visual(std::initializer_list<std::initializer_list<double>> rows) {
  return FeatureSet(Matrix::from_rows(rows), FeatureRole::visual);
}
FeatureSet textual(std::initializer_list<std::initializer_list<double>> rows) {
  return FeatureSet(Matrix::from_rows(rows), FeatureRole::textual);
}

void expect_code(ErrorCode code, auto&& fn) {
  try {
    fn();
    FAIL() << "expected " << to_string(code);
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), code) << e.what();
  }
}

}  // namespace

TEST(Normalize, ThreeFourFive) {
  const auto n = normalize(visual({{3, 4}}));
  EXPECT_DOUBLE_EQ(n.vector(0)[0], 0.6);
  EXPECT_DOUBLE_EQ(n.vector(0)[1], 0.8);
}

TEST(Normalize, AxisVectors) {
  const auto n = normalize(visual({{1, 0}, {0, 2}}));
  EXPECT_EQ(n.matrix(), Matrix::from_rows({{1, 0}, {0, 1}}));
}

TEST(Normalize, ZeroVectorRejected) {
  expect_code(ErrorCode::zero_vector, [] { normalize(visual({{0, 0}})); });
}

TEST(FeatureSet, RejectsEmptyRaggedAndNonFinite) {
  expect_code(ErrorCode::invalid_argument, [] { FeatureSet(Matrix(), FeatureRole::visual); });
  expect_code(ErrorCode::shape_mismatch,
              [] { FeatureSet::from_rows({{1.0, 2.0}, {1.0}}, FeatureRole::visual); });
  expect_code(ErrorCode::invalid_argument,
              [] { FeatureSet::from_rows({{1.0, NAN}}, FeatureRole::visual); });
}

TEST(ProbabilityVector, Validation) {
  EXPECT_NO_THROW(ProbabilityVector({0.25, 0.75}));
  expect_code(ErrorCode::invalid_argument, [] { ProbabilityVector({0.5, 0.6}); });
  expect_code(ErrorCode::invalid_argument, [] { ProbabilityVector({1.5, -0.5}); });
  const auto u = ProbabilityVector::uniform(4);
  for (double w : u.weights()) EXPECT_DOUBLE_EQ(w, 0.25);
}

TEST(CostVolume, IdenticalAndOrthogonal) {
  EXPECT_EQ(build_cost_volume(visual({{1, 0}}), textual({{1, 0}})).similarity()(0, 0), 1.0);
  EXPECT_EQ(build_cost_volume(visual({{1, 0}}), textual({{0, 1}})).similarity()(0, 0), 0.0);
}

TEST(CostVolume, DiagonalVector) {
  const auto sim = build_cost_volume(visual({{1, 1}}), textual({{1, 0}, {-1, 0}})).similarity();
  EXPECT_NEAR(sim(0, 0), 0.70710678, 1e-8);
  EXPECT_NEAR(sim(0, 1), -0.70710678, 1e-8);
}

TEST(CostVolume, Errors) {
  expect_code(ErrorCode::dimension_mismatch,
              [] { build_cost_volume(visual({{1, 0}}), textual({{1, 0, 0}})); });
  expect_code(ErrorCode::zero_vector, [] { build_cost_volume(visual({{0, 0}}), textual({{1, 0}})); });
  expect_code(ErrorCode::zero_vector, [] { build_cost_volume(visual({{1, 0}}), textual({{0, 0}})); });
}

TEST(CostMatrix, FromVolumeExamples) {
  EXPECT_EQ(cost_matrix_from_volume(CostVolume(Matrix::from_rows({{1.0}}))).cost()(0, 0), 0.0);
  EXPECT_EQ(cost_matrix_from_volume(CostVolume(Matrix::from_rows({{-1.0}}))).cost()(0, 0), 2.0);
  const auto c =
      cost_matrix_from_volume(CostVolume(Matrix::from_rows({{0.70710678, -0.70710678}}))).cost();
  EXPECT_NEAR(c(0, 0), 0.29289322, 1e-12);
  EXPECT_NEAR(c(0, 1), 1.70710678, 1e-12);
}

TEST(CostMatrix, RejectsNegativeAndNonFinite) {
  expect_code(ErrorCode::invalid_argument, [] { CostMatrix(Matrix::from_rows({{-0.1}})); });
  expect_code(ErrorCode::invalid_argument, [] { CostMatrix(Matrix::from_rows({{INFINITY}})); });
}

TEST(CostVolumeProperties, MatchesReferenceCosineAndStaysInRange) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t m = 1 + rng() % 12;
    const std::size_t n = 1 + rng() % 6;
    const std::size_t d = 1 + rng() % 9;
    const auto v = random_features(rng, m, d, FeatureRole::visual);
    const auto t = random_features(rng, n, d, FeatureRole::textual);
    const auto vol = build_cost_volume(v, t);
    const auto cost = cost_matrix_from_volume(vol);
    ASSERT_EQ(vol.rows(), m);
    ASSERT_EQ(vol.cols(), n);
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        EXPECT_NEAR(vol.similarity()(i, j), reference_cosine(v.vector(i), t.vector(j)), 1e-12);
        EXPECT_GE(vol.similarity()(i, j), -1.0);
        EXPECT_LE(vol.similarity()(i, j), 1.0);
        EXPECT_GE(cost(i, j), 0.0);
        EXPECT_LE(cost(i, j), 2.0);
        // 1 - cost recovers the volume.
        EXPECT_NEAR(1.0 - cost(i, j), vol.similarity()(i, j), 1e-12);
      }
    }
  }
}

TEST(CostVolumeProperties, SelfSimilarityHasUnitDiagonal) {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 20; ++trial) {
    const auto a = normalize(random_features(rng, 1 + rng() % 10, 2 + rng() % 6, FeatureRole::visual));
    const FeatureSet as_text(a.matrix(), FeatureRole::textual);
    const auto sim = build_cost_volume(a, as_text).similarity();
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(sim(i, i), 1.0, 1e-9);
  }
}

TEST(CostVolumeProperties, TextualPermutationPermutesColumns) {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 2 + rng() % 6;
    const auto v = random_features(rng, 7, 5, FeatureRole::visual);
    const auto t = random_features(rng, n, 5, FeatureRole::textual);
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    Matrix permuted(n, 5);
    for (std::size_t j = 0; j < n; ++j) {
      std::copy(t.vector(perm[j]).begin(), t.vector(perm[j]).end(), permuted.row(j).begin());
    }
    const auto base = build_cost_volume(v, t).similarity();
    const auto moved = build_cost_volume(v, FeatureSet(permuted, FeatureRole::textual)).similarity();
    for (std::size_t i = 0; i < 7; ++i) {
      for (std::size_t j = 0; j < n; ++j) EXPECT_EQ(moved(i, j), base(i, perm[j]));
    }
  }
}
