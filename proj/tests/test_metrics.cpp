// Copyright 2026 The darkburst Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "darkburst/metrics.hpp"
#include "metric_oracles.hpp"
#include "test_util.hpp"

namespace darkburst::metrics {
namespace {

using darkburst::testing::psnr_oracle;
using darkburst::testing::ssim_oracle;

raw::RgbImage random_image(std::size_t w, std::size_t h, std::mt19937_64& rng) {
  raw::RgbImage img(w, h);
  for (auto& v : img.pixels) v = static_cast<float>(darkburst::testing::uniform(rng, 0.0, 1.0));
  return img;
}

TEST(Psnr, ConstantOffsetIsTwentyDecibels) {
  raw::RgbImage a(8, 8, 0.25f), b(8, 8, 0.35f);
  // 0.35f - 0.25f is not exactly 0.1 in binary; the offset is computed in double.
  EXPECT_NEAR(psnr(a, b), 20.0, 1e-5);
  raw::RgbImage c(8, 8, 0.5f), d(8, 8, 0.625f);  // exactly representable offset 1/8
  EXPECT_NEAR(psnr(c, d), 10.0 * std::log10(64.0), 1e-12);
}

TEST(Psnr, IdenticalIsInfinite) {
  std::mt19937_64 rng(1);
  const auto a = random_image(8, 8, rng);
  EXPECT_EQ(psnr(a, a), std::numeric_limits<double>::infinity());
}

TEST(Ssim, IdenticalIsOne) {
  std::mt19937_64 rng(2);
  const auto a = random_image(16, 16, rng);
  EXPECT_NEAR(ssim(a, a), 1.0, 1e-12);
  const auto small = random_image(6, 5, rng);
  EXPECT_NEAR(ssim(small, small), 1.0, 1e-12);
}

TEST(Metrics, MatchNaiveReferences) {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 20; ++t) {
    const std::size_t w = 12 + static_cast<std::size_t>(t % 5) * 2, h = 11 + static_cast<std::size_t>(t % 3);
    const auto a = random_image(w, h, rng), b = random_image(w, h, rng);
    EXPECT_NEAR(psnr(a, b), psnr_oracle(a, b), 1e-6);
    EXPECT_NEAR(ssim(a, b), ssim_oracle(a, b), 1e-6);
  }
}

TEST(Metrics, ShapeMismatchRejected) {
  EXPECT_THROW(psnr(raw::RgbImage(4, 4), raw::RgbImage(4, 5)), std::invalid_argument);
  EXPECT_THROW(ssim(raw::RgbImage(4, 4), raw::RgbImage(5, 4)), std::invalid_argument);
}

TEST(Psnr, DecreasesWithNoise) {
  // For each adjacent pair of noise levels, all 5 x 5 seed pairings are
  // compared; at least 24 of the 25 must order correctly.
  const double sigmas[] = {0.01, 0.02, 0.05, 0.1};
  double p[4][5];
  for (std::size_t k = 0; k < 4; ++k)
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      std::mt19937_64 rng(seed * 16 + k);
      std::normal_distribution<double> normal;
      raw::RgbImage clean(32, 32, 0.5f), noisy = clean;
      for (auto& v : noisy.pixels) v = static_cast<float>(v + sigmas[k] * normal(rng));
      p[k][seed] = psnr(clean, noisy);
    }
  for (std::size_t k = 0; k + 1 < 4; ++k) {
    int ordered = 0;
    for (std::size_t a = 0; a < 5; ++a)
      for (std::size_t b = 0; b < 5; ++b) ordered += p[k][a] > p[k + 1][b];
    EXPECT_GE(ordered, 24) << "sigma " << sigmas[k] << " -> " << sigmas[k + 1];
  }
}

}  // namespace
}  // namespace darkburst::metrics
