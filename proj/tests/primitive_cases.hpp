// Copyright 2026 The darkburst Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <vector>

#include "darkburst/ops.hpp"
#include "test_util.hpp"

namespace darkburst::testing {

// Random scalar projection of an op's output, so every output coordinate
// contributes with a distinct weight.
inline Tensor64 project(const Tensor64& y, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto r = random_tensor(y.shape(), rng);
  return sum(mul(y, r));
}

struct PrimitiveCase {
  const char* name;
  // Fills the parameters and returns the op applied to them.
  std::function<std::function<Tensor64()>(std::mt19937_64&, std::vector<Tensor64>&)> build;
};

inline std::size_t extent(std::mt19937_64& rng, std::size_t lo, std::size_t hi) {
  return lo + static_cast<std::size_t>(rng() % (hi - lo + 1));
}

/// One case per differentiable primitive; shapes drawn from the rng.
inline std::vector<PrimitiveCase> primitive_cases() {
  return {
      {"conv2d", [](auto& rng, auto& ps) {
         const std::size_t c = extent(rng, 1, 3), f = extent(rng, 1, 3), h = extent(rng, 3, 8), w = extent(rng, 3, 8);
         ps = {random_param({1, c, h, w}, rng), random_param({f, c, 3, 3}, rng), random_param({f}, rng)};
         return [ps, stride = 1 + static_cast<int>(rng() % 2)] { return conv2d(ps[0], ps[1], ps[2], stride, 1); };
       }},
      {"transpose_conv2d", [](auto& rng, auto& ps) {
         const std::size_t c = extent(rng, 1, 3), f = extent(rng, 1, 3), h = extent(rng, 1, 4), w = extent(rng, 1, 4);
         ps = {random_param({1, c, h, w}, rng), random_param({c, f, 2, 2}, rng), random_param({f}, rng)};
         return [ps] { return transpose_conv2d(ps[0], ps[1], ps[2], 2, 0); };
       }},
      {"set_max", [](auto& rng, auto& ps) {
         const Shape s{1, 2, extent(rng, 1, 8), extent(rng, 1, 8)};
         ps = {random_param(s, rng), random_param(s, rng), random_param(s, rng)};
         return [ps] { return set_max(std::span<const Tensor64>(ps)); };
       }},
      {"set_max_masked", [](auto& rng, auto& ps) {
         const std::size_t h = extent(rng, 1, 8), w = extent(rng, 1, 8);
         ps = {random_param({1, 2, h, w}, rng), random_param({1, 2, h, w}, rng)};
         std::vector<SpatialMask> masks(2, SpatialMask(h * w));
         for (auto& m : masks)
           for (auto& v : m) v = static_cast<std::uint8_t>(rng() % 2);
         return [ps, masks] { return set_max(std::span<const Tensor64>(ps), std::span<const SpatialMask>(masks)); };
       }},
      {"leaky_relu", [](auto& rng, auto& ps) {
         ps = {random_param({1, 2, extent(rng, 1, 8), extent(rng, 1, 8)}, rng)};
         return [ps] { return leaky_relu(ps[0]); };
       }},
      {"sigmoid", [](auto& rng, auto& ps) {
         ps = {random_param({1, 2, extent(rng, 1, 8), extent(rng, 1, 8)}, rng, -4, 4)};
         return [ps] { return sigmoid(ps[0]); };
       }},
      {"clamp", [](auto& rng, auto& ps) {
         ps = {random_param({1, 2, extent(rng, 1, 8), extent(rng, 1, 8)}, rng, -0.5, 1.5)};
         return [ps] { return clamp(ps[0], 0.0, 1.0); };
       }},
      {"add_sub_mul_scale", [](auto& rng, auto& ps) {
         const Shape s{1, 3, extent(rng, 1, 8), extent(rng, 1, 8)};
         ps = {random_param(s, rng), random_param(s, rng)};
         return [ps] { return scale(mul(add(ps[0], ps[1]), sub(ps[0], ps[1])), 0.7); };
       }},
      {"add_n", [](auto& rng, auto& ps) {
         const Shape s{2, extent(rng, 1, 8)};
         ps = {random_param(s, rng), random_param(s, rng), random_param(s, rng)};
         return [ps] { return add_n(std::span<const Tensor64>(ps)); };
       }},
      {"concat", [](auto& rng, auto& ps) {
         const std::size_t h = extent(rng, 1, 8), w = extent(rng, 1, 8);
         ps = {random_param({1, 2, h, w}, rng), random_param({1, 3, h, w}, rng)};
         return [ps] { return concat(std::span<const Tensor64>(ps), 1); };
       }},
      {"max_pool2d", [](auto& rng, auto& ps) {
         ps = {random_param({1, 2, 2 * extent(rng, 1, 4), 2 * extent(rng, 1, 4)}, rng)};
         return [ps] { return max_pool2d(ps[0]); };
       }},
      {"global_avg_pool", [](auto& rng, auto& ps) {
         ps = {random_param({2, 3, extent(rng, 1, 8), extent(rng, 1, 8)}, rng)};
         return [ps] { return global_avg_pool(ps[0]); };
       }},
      {"bilinear_half", [](auto& rng, auto& ps) {
         ps = {random_param({1, 2, 2 * extent(rng, 1, 4), 2 * extent(rng, 1, 4)}, rng)};
         return [ps] { return bilinear_resize(ps[0], Resize::Half); };
       }},
      {"bilinear_double", [](auto& rng, auto& ps) {
         ps = {random_param({1, 2, extent(rng, 1, 8), extent(rng, 1, 8)}, rng)};
         return [ps] { return bilinear_resize(ps[0], Resize::Double); };
       }},
      {"depth_to_space", [](auto& rng, auto& ps) {
         ps = {random_param({1, 8, extent(rng, 1, 8), extent(rng, 1, 8)}, rng)};
         return [ps] { return depth_to_space(ps[0], 2); };
       }},
      {"scale_channels", [](auto& rng, auto& ps) {
         ps = {random_param({2, 3, extent(rng, 1, 8), extent(rng, 1, 8)}, rng), random_param({2, 3, 1, 1}, rng)};
         return [ps] { return scale_channels(ps[0], ps[1]); };
       }},
      {"mean_abs_diff", [](auto& rng, auto& ps) {
         const Shape s{1, 2, extent(rng, 1, 8), extent(rng, 1, 8)};
         ps = {random_param(s, rng), random_param(s, rng)};
         return [ps] { return mean_abs_diff(ps[0], ps[1]); };
       }},
      {"mean", [](auto& rng, auto& ps) {
         ps = {random_param({3, extent(rng, 1, 8)}, rng)};
         return [ps] { return mean(ps[0]); };
       }},
      {"batch_item", [](auto& rng, auto& ps) {
         ps = {random_param({3, 2, extent(rng, 1, 8), extent(rng, 1, 8)}, rng)};
         return [ps] { return batch_item(ps[0], 1); };
       }},
      {"gather_positions", [](auto& rng, auto& ps) {
         const std::size_t h = extent(rng, 2, 8), w = extent(rng, 2, 8);
         ps = {random_param({1, 3, h, w}, rng)};
         std::vector<std::size_t> pos{0, h * w - 1, (h * w) / 2};
         return [ps, pos] { return gather_positions(ps[0], std::span<const std::size_t>(pos)); };
       }},
      {"apply_mask", [](auto& rng, auto& ps) {
         const Shape s{1, 2, extent(rng, 1, 8), extent(rng, 1, 8)};
         ps = {random_param(s, rng)};
         std::vector<double> mask(shape_numel(s));
         for (auto& v : mask) v = static_cast<double>(rng() % 2);
         return [ps, mask] { return apply_mask(ps[0], std::span<const double>(mask)); };
       }},
  };
}

}  // namespace darkburst::testing
