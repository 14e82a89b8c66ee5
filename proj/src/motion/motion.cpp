// Copyright 2026 The darkburst Authors
// SPDX-License-Identifier: Apache-2.0

#include "darkburst/motion.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace darkburst::motion {

double FlowField::magnitude(std::size_t x, std::size_t y) const {
  const std::size_t i = y * width + x;
  return std::hypot(static_cast<double>(dx[i]), static_cast<double>(dy[i]));
}

FlowField estimate_flow(const raw::RgbImage& ref, const raw::RgbImage& tgt, int block, int search_radius) {
  if (ref.width != tgt.width || ref.height != tgt.height)
    throw std::invalid_argument("estimate_flow: frame sizes differ");
  if (block < 1 || search_radius < 0) throw std::invalid_argument("estimate_flow: block >= 1, radius >= 0");
  const auto w = static_cast<long>(ref.width), h = static_cast<long>(ref.height);
  FlowField flow{ref.width, ref.height, std::vector<int>(ref.width * ref.height, 0),
                 std::vector<int>(ref.width * ref.height, 0)};
  if (w == 0 || h == 0) return flow;
  const long bw = w < block || h < block ? w : block;
  const long bh = w < block || h < block ? h : block;

  for (long by = 0; by < h; by += bh) {
    for (long bx = 0; bx < w; bx += bw) {
      const long x1 = std::min(bx + bw, w), y1 = std::min(by + bh, h);
      const long pixels = (x1 - bx) * (y1 - by);
      double best = std::numeric_limits<double>::infinity();
      int best_mag = 0, best_dx = 0, best_dy = 0;
      for (int dy = -search_radius; dy <= search_radius; ++dy) {
        for (int dx = -search_radius; dx <= search_radius; ++dx) {
          double sad = 0.0;
          long count = 0;
          for (long y = by; y < y1; ++y) {
            const long ty = y + dy;
            if (ty < 0 || ty >= h) continue;
            for (long x = bx; x < x1; ++x) {
              const long tx = x + dx;
              if (tx < 0 || tx >= w) continue;
              for (std::size_t c = 0; c < 3; ++c)
                sad += std::abs(static_cast<double>(ref.at(static_cast<std::size_t>(x), static_cast<std::size_t>(y), c)) -
                                tgt.at(static_cast<std::size_t>(tx), static_cast<std::size_t>(ty), c));
              ++count;
            }
          }
          if (2 * count < pixels || count == 0) continue;
          const double cost = sad / static_cast<double>(count);
          const int mag = dx * dx + dy * dy;
          if (cost < best || (cost == best && mag < best_mag)) {
            best = cost;
            best_mag = mag;
            best_dx = dx;
            best_dy = dy;
          }
        }
      }
      for (long y = by; y < y1; ++y)
        for (long x = bx; x < x1; ++x) {
          const auto i = static_cast<std::size_t>(y * w + x);
          flow.dx[i] = best_dx;
          flow.dy[i] = best_dy;
        }
    }
  }
  return flow;
}

SpatialMask motion_valid(const FlowField& flow, double threshold) {
  SpatialMask mask(flow.width * flow.height);
  for (std::size_t y = 0; y < flow.height; ++y)
    for (std::size_t x = 0; x < flow.width; ++x)
      mask[y * flow.width + x] = flow.magnitude(x, y) <= threshold ? 1 : 0;
  return mask;
}

Tensor mask_large_motion(const Tensor& t, const FlowField& flow, double threshold) {
  if (t.rank() != 4 || t.dim(0) != 1 || t.dim(2) != flow.height || t.dim(3) != flow.width)
    throw ShapeError("mask_large_motion: tensor " + shape_str(t.shape()) + " does not match flow " +
                     std::to_string(flow.height) + "x" + std::to_string(flow.width));
  const auto valid = motion_valid(flow, threshold);
  const std::size_t plane = flow.width * flow.height;
  std::vector<float> out(t.values().begin(), t.values().end());
  for (std::size_t c = 0; c < t.dim(1); ++c)
    for (std::size_t i = 0; i < plane; ++i)
      if (!valid[i]) out[c * plane + i] = 0.0f;
  return Tensor(t.shape(), std::move(out));
}

}  // namespace darkburst::motion
