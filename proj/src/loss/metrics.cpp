// Copyright 2026 The darkburst Authors
// SPDX-License-Identifier: Apache-2.0

#include "darkburst/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace darkburst::metrics {

namespace {

void check_same(const raw::RgbImage& a, const raw::RgbImage& b, const char* what) {
  if (a.width != b.width || a.height != b.height)
    throw std::invalid_argument(std::string(what) + ": image sizes differ (" + std::to_string(a.width) + "x" +
                                std::to_string(a.height) + " vs " + std::to_string(b.width) + "x" +
                                std::to_string(b.height) + ")");
  if (a.width == 0 || a.height == 0) throw std::invalid_argument(std::string(what) + ": empty image");
}

std::vector<double> gaussian_1d(int size, double sigma) {
  std::vector<double> g(static_cast<std::size_t>(size));
  const int half = size / 2;
  double total = 0.0;
  for (int i = 0; i < size; ++i) {
    const double d = i - half;
    g[static_cast<std::size_t>(i)] = std::exp(-d * d / (2.0 * sigma * sigma));
    total += g[static_cast<std::size_t>(i)];
  }
  for (auto& v : g) v /= total;
  return g;
}

// Separable valid-mode filter over an H x W plane.
std::vector<double> filter_valid(const std::vector<double>& plane, std::size_t h, std::size_t w,
                                 const std::vector<double>& g) {
  const std::size_t k = g.size();
  const std::size_t ow = w - k + 1, oh = h - k + 1;
  std::vector<double> rows(h * ow, 0.0);
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < ow; ++x) {
      double s = 0.0;
      for (std::size_t i = 0; i < k; ++i) s += g[i] * plane[y * w + x + i];
      rows[y * ow + x] = s;
    }
  std::vector<double> out(oh * ow, 0.0);
  for (std::size_t y = 0; y < oh; ++y)
    for (std::size_t x = 0; x < ow; ++x) {
      double s = 0.0;
      for (std::size_t i = 0; i < k; ++i) s += g[i] * rows[(y + i) * ow + x];
      out[y * ow + x] = s;
    }
  return out;
}

}  // namespace

double psnr(const raw::RgbImage& y, const raw::RgbImage& y_hat) {
  check_same(y, y_hat, "psnr");
  double sq = 0.0;
  for (std::size_t i = 0; i < y.pixels.size(); ++i) {
    const double d = static_cast<double>(y.pixels[i]) - y_hat.pixels[i];
    sq += d * d;
  }
  if (sq == 0.0) return std::numeric_limits<double>::infinity();
  const double mse = sq / static_cast<double>(y.pixels.size());
  return -10.0 * std::log10(mse);
}

double ssim(const raw::RgbImage& y, const raw::RgbImage& y_hat) {
  check_same(y, y_hat, "ssim");
  constexpr double c1 = 0.01 * 0.01;
  constexpr double c2 = 0.03 * 0.03;
  const std::size_t h = y.height, w = y.width;
  int size = static_cast<int>(std::min<std::size_t>({11, h, w}));
  if (size % 2 == 0) --size;
  const auto g = gaussian_1d(size, 1.5);
  const std::size_t area = h * w;
  double total = 0.0;
  std::size_t windows = 0;
  std::vector<double> a(area), b(area), aa(area), bb(area), ab(area);
  for (std::size_t c = 0; c < 3; ++c) {
    for (std::size_t i = 0; i < area; ++i) {
      a[i] = y.pixels[i * 3 + c];
      b[i] = y_hat.pixels[i * 3 + c];
      aa[i] = a[i] * a[i];
      bb[i] = b[i] * b[i];
      ab[i] = a[i] * b[i];
    }
    const auto mu_a = filter_valid(a, h, w, g);
    const auto mu_b = filter_valid(b, h, w, g);
    const auto s_aa = filter_valid(aa, h, w, g);
    const auto s_bb = filter_valid(bb, h, w, g);
    const auto s_ab = filter_valid(ab, h, w, g);
    for (std::size_t i = 0; i < mu_a.size(); ++i) {
      const double va = s_aa[i] - mu_a[i] * mu_a[i];
      const double vb = s_bb[i] - mu_b[i] * mu_b[i];
      const double cov = s_ab[i] - mu_a[i] * mu_b[i];
      total += ((2 * mu_a[i] * mu_b[i] + c1) * (2 * cov + c2)) /
               ((mu_a[i] * mu_a[i] + mu_b[i] * mu_b[i] + c1) * (va + vb + c2));
    }
    windows += mu_a.size();
  }
  return total / static_cast<double>(windows);
}

}  // namespace darkburst::metrics
