// Copyright 2026 The darkburst Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "darkburst/errors.hpp"
#include "darkburst/gradcheck.hpp"
#include "darkburst/losses.hpp"
#include "darkburst/ops.hpp"
#include "cx_support.hpp"
#include "test_util.hpp"

namespace darkburst::loss {
namespace {

using darkburst::testing::cx_oracle;
using darkburst::testing::min_pairwise_cosine_distance;
using darkburst::testing::random_tensor;
using darkburst::testing::rows_tensor;

TEST(L1, Examples) {
  std::mt19937_64 rng(1);
  const auto y = random_tensor({2, 3, 4, 4}, rng);
  EXPECT_EQ(l1_loss(y, y).item(), 0.0);
  std::vector<double> shifted(y.values().begin(), y.values().end());
  for (auto& v : shifted) v += 0.1;
  EXPECT_NEAR(l1_loss(y, Tensor64(y.shape(), shifted)).item(), 0.1, 1e-12);
  const auto z = random_tensor({2, 3, 4, 4}, rng);
  double oracle = 0;
  for (std::size_t i = 0; i < y.size(); ++i) oracle += std::abs(y.values()[i] - z.values()[i]);
  EXPECT_NEAR(l1_loss(y, z).item(), oracle / static_cast<double>(y.size()), 1e-7);
  EXPECT_THROW(l1_loss(y, random_tensor({2, 3, 4, 5}, rng)), ShapeError);
}

TEST(CxSimilarity, TwoFeatureHandCase) {
  const auto r = rows_tensor({{1, 0}, {0, 1}});
  EXPECT_NEAR(cx_similarity(r, r, CxParams{}).item(), 1.0, 1e-6);
}

TEST(CxSimilarity, SingleElementIsOne) {
  std::mt19937_64 rng(2);
  for (int t = 0; t < 5; ++t)
    for (auto norm : {CxNormalization::Row, CxNormalization::Column}) {
      CxParams p;
      p.normalization = norm;
      EXPECT_EQ(cx_similarity(random_tensor({1, 7}, rng), random_tensor({1, 7}, rng), p).item(), 1.0);
    }
}

TEST(CxSimilarity, UnmatchedColumnAgreesWithOracle) {
  const std::vector<std::vector<double>> r = {{1, 0}, {0, 1}}, s = {{1, 0}, {1, 0}};
  for (auto norm : {CxNormalization::Row, CxNormalization::Column}) {
    CxParams p;
    p.normalization = norm;
    const double got = cx_similarity(rows_tensor(r), rows_tensor(s), p).item();
    EXPECT_NEAR(got, cx_oracle(r, s, p), 1e-6);
    EXPECT_GT(got, 0.0);
    EXPECT_LE(got, 1.0);
  }
}

TEST(CxSimilarity, BruteForceOracle) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    std::mt19937_64 rng(seed);
    const std::size_t n = 1 + seed * 7, c = 3 + seed % 5;
    std::vector<std::vector<double>> r(n, std::vector<double>(c)), s(n, std::vector<double>(c));
    for (auto* set : {&r, &s})
      for (auto& row : *set)
        for (auto& v : row) v = darkburst::testing::uniform(rng, -1.0, 1.0);
    r[0].assign(c, 0.0);  // zero-norm convention
    for (auto norm : {CxNormalization::Row, CxNormalization::Column}) {
      CxParams p;
      p.normalization = norm;
      p.h = seed % 2 ? 0.5 : 0.1;
      EXPECT_NEAR(cx_similarity(rows_tensor(r), rows_tensor(s), p).item(), cx_oracle(r, s, p), 1e-6)
          << "seed " << seed << " n " << n;
    }
  }
}

TEST(CxSimilarity, ScaleAndPermutationInvariant) {
  std::mt19937_64 rng(11);
  const std::size_t n = 24, c = 6;
  std::vector<std::vector<double>> r(n, std::vector<double>(c)), s(n, std::vector<double>(c));
  for (auto* set : {&r, &s})
    for (auto& row : *set)
      for (auto& v : row) v = darkburst::testing::uniform(rng, -1.0, 1.0);
  const CxParams p;
  const double base = cx_similarity(rows_tensor(r), rows_tensor(s), p).item();
  auto scaled = r;
  for (auto& row : scaled) {
    const double k = darkburst::testing::uniform(rng, 0.1, 10.0);
    for (auto& v : row) v *= k;
  }
  EXPECT_NEAR(cx_similarity(rows_tensor(scaled), rows_tensor(s), p).item(), base, 1e-7);
  auto pr = r, ps = s;
  std::shuffle(pr.begin(), pr.end(), rng);
  std::shuffle(ps.begin(), ps.end(), rng);
  EXPECT_NEAR(cx_similarity(rows_tensor(pr), rows_tensor(ps), p).item(), base, 1e-12);
}

TEST(CxSimilarity, RejectsMismatchedSets) {
  std::mt19937_64 rng(12);
  EXPECT_THROW(cx_similarity(random_tensor({3, 4}, rng), random_tensor({4, 4}, rng), CxParams{}), ShapeError);
  EXPECT_THROW(cx_similarity(random_tensor({3, 4}, rng), random_tensor({3, 5}, rng), CxParams{}), ShapeError);
}

TEST(Features, DeterministicAndDistinct) {
  std::mt19937_64 rng(13);
  const int levels[] = {0, 1, 2, 3};
  const auto img = random_tensor({1, 3, 16, 16}, rng, 0.0, 1.0);
  const auto a = feature_extract(img, std::span<const int>(levels));
  const auto b = feature_extract(img, std::span<const int>(levels));
  ASSERT_EQ(a.size(), 4u);
  for (std::size_t l = 0; l < 4; ++l) {
    EXPECT_TRUE(darkburst::testing::bit_equal(a[l], b[l]));
    EXPECT_EQ(a[l].dim(2), 16u >> l);
  }
  for (int t = 0; t < 10; ++t) {
    const auto x = feature_extract(random_tensor({1, 3, 16, 16}, rng, 0.0, 1.0), std::span<const int>(levels));
    const auto y = feature_extract(random_tensor({1, 3, 16, 16}, rng, 0.0, 1.0), std::span<const int>(levels));
    for (std::size_t l = 0; l < 4; ++l) EXPECT_FALSE(darkburst::testing::bit_equal(x[l], y[l]));
  }
  const int bad[] = {kFeatureLevels};
  EXPECT_THROW(feature_extract(img, std::span<const int>(bad)), std::invalid_argument);
}

TEST(Features, PeriodicShiftPreservesInteriorMultiset) {
  // Vertical stripes with period 4, circularly shifted by one column. Level 0
  // sees a 5x5 neighborhood, so columns [2, 13] are free of border effects
  // and cover three full periods in both images.
  const std::size_t w = 16, h = 8;
  std::vector<double> base(3 * h * w), shifted(3 * h * w);
  const double pattern[3][4] = {{0.1, 0.9, 0.4, 0.6}, {0.8, 0.2, 0.5, 0.3}, {0.0, 1.0, 0.7, 0.25}};
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t x = 0; x < w; ++x) {
        base[(c * h + y) * w + x] = pattern[c][x % 4];
        shifted[(c * h + y) * w + x] = pattern[c][(x + 1) % 4];
      }
  const int level0[] = {0};
  const auto fa = feature_extract(Tensor64({1, 3, h, w}, base), std::span<const int>(level0))[0];
  const auto fb = feature_extract(Tensor64({1, 3, h, w}, shifted), std::span<const int>(level0))[0];
  const std::size_t ch = fa.dim(1);
  auto multiset = [&](const Tensor64& f) {
    std::vector<std::vector<double>> vecs;
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t x = 2; x < w - 2; ++x) {
        std::vector<double> v(ch);
        for (std::size_t c = 0; c < ch; ++c) v[c] = f.values()[(c * h + y) * w + x];
        v.push_back(static_cast<double>(y));
        vecs.push_back(std::move(v));
      }
    std::sort(vecs.begin(), vecs.end());
    return vecs;
  };
  EXPECT_EQ(multiset(fa), multiset(fb));
}

TEST(Perceptual, ZeroAndNonNegative) {
  std::mt19937_64 rng(14);
  const int levels[] = {1, 2};
  for (int t = 0; t < 5; ++t) {
    const auto y = random_tensor({2, 3, 8, 8}, rng, 0.0, 1.0);
    EXPECT_EQ(perceptual_loss(y, y, std::span<const int>(levels)).item(), 0.0);
    EXPECT_GE(perceptual_loss(y, random_tensor({2, 3, 8, 8}, rng, 0.0, 1.0), std::span<const int>(levels)).item(),
              0.0);
  }
}

TEST(Perceptual, GradientThroughTinyImage) {
  std::mt19937_64 rng(15);
  const int levels[] = {0, 1};
  const auto y = random_tensor({1, 3, 4, 4}, rng, 0.0, 1.0);
  const double err = grad_check(
      [&](const Tensor64& x) { return perceptual_loss(y, x, std::span<const int>(levels)); },
      random_tensor({1, 3, 4, 4}, rng, 0.0, 1.0), 1e-6);
  EXPECT_LE(err, 1e-4);
}

TEST(Contextual, WellSeparatedSetAgainstItselfNearZero) {
  // Feature sets meeting the separation precondition directly.
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    std::mt19937_64 rng(seed);
    const auto f = random_tensor({1, 32, 8, 8}, rng);
    ASSERT_GE(min_pairwise_cosine_distance(f), 0.1);
    std::vector<double> rows(64 * 32);
    for (std::size_t pos = 0; pos < 64; ++pos)
      for (std::size_t c = 0; c < 32; ++c) rows[pos * 32 + c] = f.values()[c * 64 + pos];
    const Tensor64 r({64, 32}, rows);
    EXPECT_LE(-std::log(cx_similarity(r, r, CxParams{}).item()), 0.01);
  }
}

TEST(Contextual, IdenticalImagesNearZero) {
  const int levels[] = {1, 2};
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    std::mt19937_64 rng(seed);
    const auto y = random_tensor({2, 3, 16, 16}, rng, 0.0, 1.0);
    for (const auto& f : feature_extract(batch_item(y, 0), std::span<const int>(levels)))
      ASSERT_GT(min_pairwise_cosine_distance(f), 0.0);
    EXPECT_LE(contextual_loss(y, y, std::span<const int>(levels), CxParams{}).item(), 0.01);
    EXPECT_LE(hybrid_loss(y, y, LossConfig{}).item(), 0.01);
    const double other =
        contextual_loss(y, random_tensor({2, 3, 16, 16}, rng, 0.0, 1.0), std::span<const int>(levels), CxParams{})
            .item();
    EXPECT_TRUE(std::isfinite(other));
    EXPECT_GT(other, 0.01);
  }
}

TEST(Hybrid, ModesAndWeights) {
  std::mt19937_64 rng(17);
  const auto y = random_tensor({2, 3, 8, 8}, rng, 0.0, 1.0);
  const auto y_hat = random_tensor({2, 3, 8, 8}, rng, 0.0, 1.0);
  LossConfig config;
  config.mode = LossMode::L1;
  EXPECT_EQ(hybrid_loss(y, y_hat, config).item(), l1_loss(y, y_hat).item());
  config.mode = LossMode::L1Contextual;
  config.feature_weight = 0.0;
  EXPECT_EQ(hybrid_loss(y, y_hat, config).item(), l1_loss(y, y_hat).item());
  config.mode = LossMode::L1Perceptual;
  config.feature_weight = 2.0;
  config.pixel_weight = 0.5;
  EXPECT_NEAR(hybrid_loss(y, y_hat, config).item(),
              0.5 * l1_loss(y, y_hat).item() +
                  2.0 * perceptual_loss(y, y_hat, std::span<const int>(config.levels)).item(),
              1e-12);
  EXPECT_EQ(hybrid_loss(y, y, LossConfig{LossMode::L1}).item(), 0.0);
}

TEST(Hybrid, GradientEveryMode) {
  for (auto mode : {LossMode::L1, LossMode::L1Perceptual, LossMode::L1Contextual})
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      std::mt19937_64 rng(100 + seed);
      LossConfig config;
      config.mode = mode;
      const auto y = random_tensor({1, 3, 8, 8}, rng, 0.0, 1.0);
      const double err = grad_check([&](const Tensor64& x) { return hybrid_loss(y, x, config); },
                                    random_tensor({1, 3, 8, 8}, rng, 0.0, 1.0), 1e-6);
      EXPECT_LE(err, 1e-3) << to_string(mode) << " seed " << seed;
    }
}

TEST(Hybrid, ModeNames) {
  for (auto mode : {LossMode::L1, LossMode::L1Perceptual, LossMode::L1Contextual})
    EXPECT_EQ(loss_mode_from_string(to_string(mode)), mode);
  EXPECT_EQ(to_string(LossMode::L1Contextual), "L1+CX");
  EXPECT_THROW(loss_mode_from_string("L2"), std::invalid_argument);
}

TEST(SamplePositions, SortedDistinctDeterministic) {
  const auto a = sample_positions(5000, 1024, 9);
  EXPECT_EQ(a, sample_positions(5000, 1024, 9));
  EXPECT_NE(a, sample_positions(5000, 1024, 10));
  ASSERT_EQ(a.size(), 1024u);
  EXPECT_TRUE(std::is_sorted(a.begin(), a.end()));
  EXPECT_EQ(std::adjacent_find(a.begin(), a.end()), a.end());
  EXPECT_LT(a.back(), 5000u);
  std::vector<std::size_t> all(100);
  std::iota(all.begin(), all.end(), 0);
  EXPECT_EQ(sample_positions(100, 1024, 9), all);
}

}  // namespace
}  // namespace darkburst::loss
