// Copyright 2026 The darkburst Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cstdint>
#include <random>
#include <vector>

#include "darkburst/nets.hpp"
#include "darkburst/tensor.hpp"

namespace darkburst::testing {

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

template <typename T = double>
BasicTensor<T> random_tensor(const Shape& shape, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  std::vector<T> v(shape_numel(shape));
  for (auto& x : v) x = static_cast<T>(uniform(rng, lo, hi));
  return BasicTensor<T>(shape, std::move(v));
}

template <typename T = double>
BasicTensor<T> random_param(const Shape& shape, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  auto t = random_tensor<T>(shape, rng, lo, hi);
  return BasicTensor<T>::parameter(shape, {t.values().begin(), t.values().end()});
}

/// Owning copy; a range-for over `.values()` of a temporary would dangle.
template <typename T>
std::vector<T> copy_values(const BasicTensor<T>& t) {
  return {t.values().begin(), t.values().end()};
}

template <typename T>
bool bit_equal(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  if (a.shape() != b.shape()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a.values()[i] != b.values()[i]) return false;
  return true;
}

/// Direct six-loop convolution in double.
/// init_params with every bias and both head kernels redrawn. The initial
/// heads are zero, which makes every network output input-independent.
inline nets::NetParams random_params(const nets::ArchConfig& arch, std::uint64_t seed) {
  auto params = nets::init_params(arch, seed);
  std::mt19937_64 rng(seed ^ 0x5eedULL);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& name = params.names()[i];
    auto t = params.tensors()[i];
    if (name.ends_with(".head.w"))
      for (auto& v : t.mutable_values()) v = static_cast<float>(uniform(rng, -0.3, 0.3));
    else if (name.ends_with(".b"))
      for (auto& v : t.mutable_values())
        v = static_cast<float>((name == "fine.head.b" ? 0.5 : 0.0) + uniform(rng, -0.1, 0.1));
  }
  return params;
}

/// True when all values are equal.
template <typename T>
bool is_constant(const BasicTensor<T>& t) {
  const auto v = copy_values(t);
  return std::all_of(v.begin(), v.end(), [&](T x) { return x == v.front(); });
}

inline std::vector<double> conv_oracle(const Tensor64& x, const Tensor64& k, const std::vector<double>& bias,
                                       int stride, int pad) {
  const long n = static_cast<long>(x.dim(0)), c = static_cast<long>(x.dim(1)), h = static_cast<long>(x.dim(2)),
             w = static_cast<long>(x.dim(3));
  const long f = static_cast<long>(k.dim(0)), kh = static_cast<long>(k.dim(2)), kw = static_cast<long>(k.dim(3));
  const long oh = (h + 2 * pad - kh) / stride + 1, ow = (w + 2 * pad - kw) / stride + 1;
  std::vector<double> out(static_cast<std::size_t>(n * f * oh * ow), 0.0);
  for (long b = 0; b < n; ++b)
    for (long o = 0; o < f; ++o)
      for (long y = 0; y < oh; ++y)
        for (long xx = 0; xx < ow; ++xx) {
          double s = bias.empty() ? 0.0 : bias[static_cast<std::size_t>(o)];
          for (long ci = 0; ci < c; ++ci)
            for (long i = 0; i < kh; ++i)
              for (long j = 0; j < kw; ++j) {
                const long iy = y * stride + i - pad, ix = xx * stride + j - pad;
                if (iy < 0 || iy >= h || ix < 0 || ix >= w) continue;
                s += x.values()[static_cast<std::size_t>(((b * c + ci) * h + iy) * w + ix)] *
                     k.values()[static_cast<std::size_t>(((o * c + ci) * kh + i) * kw + j)];
              }
          out[static_cast<std::size_t>(((b * f + o) * oh + y) * ow + xx)] = s;
        }
  return out;
}

/// Bilinear sample of one plane at continuous source coordinates with clamping.
inline double bilinear_sample(const double* plane, long h, long w, double sy, double sx) {
  sy = std::min(std::max(sy, 0.0), static_cast<double>(h - 1));
  sx = std::min(std::max(sx, 0.0), static_cast<double>(w - 1));
  const long y0 = static_cast<long>(sy), x0 = static_cast<long>(sx);
  const long y1 = std::min(y0 + 1, h - 1), x1 = std::min(x0 + 1, w - 1);
  const double fy = sy - static_cast<double>(y0), fx = sx - static_cast<double>(x0);
  return (1 - fy) * ((1 - fx) * plane[y0 * w + x0] + fx * plane[y0 * w + x1]) +
         fy * ((1 - fx) * plane[y1 * w + x0] + fx * plane[y1 * w + x1]);
}

/// Half-pixel-center bilinear resampling of [N,C,H,W] by `factor` (0.5 or 2).
inline std::vector<double> resize_oracle(const Tensor64& x, double factor) {
  const long n = static_cast<long>(x.dim(0) * x.dim(1)), h = static_cast<long>(x.dim(2)),
             w = static_cast<long>(x.dim(3));
  const long oh = static_cast<long>(h * factor), ow = static_cast<long>(w * factor);
  std::vector<double> out(static_cast<std::size_t>(n * oh * ow));
  for (long p = 0; p < n; ++p)
    for (long y = 0; y < oh; ++y)
      for (long xx = 0; xx < ow; ++xx) {
        const double sy = (y + 0.5) / factor - 0.5, sx = (xx + 0.5) / factor - 0.5;
        out[static_cast<std::size_t>((p * oh + y) * ow + xx)] =
            bilinear_sample(x.values().data() + p * h * w, h, w, sy, sx);
      }
  return out;
}

}  // namespace darkburst::testing
