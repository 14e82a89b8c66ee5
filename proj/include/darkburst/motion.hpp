// Copyright 2026 The darkburst Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <vector>

#include "darkburst/ops.hpp"
#include "darkburst/raw.hpp"

// Block-matching displacement between coarse frames and the motion mask
// applied to fine-network inputs before cross-frame fusion.

namespace darkburst::motion {

struct MotionParams {
  bool enabled = false;
  int block = 8;
  int search_radius = 4;
  /// Displacements with magnitude above this (packed pixels) are masked.
  double threshold = 1.0;
};

/// Per-pixel integer displacement; tgt(x + dx, y + dy) matches ref(x, y).
struct FlowField {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<int> dx;
  std::vector<int> dy;

  double magnitude(std::size_t x, std::size_t y) const;
};

/// Per block, the displacement minimizing the mean absolute difference over
/// the in-bounds overlap, replicated to its pixels. Ties go to the smallest
/// magnitude, then to the first candidate in row-major (dy, dx) order.
/// Images smaller than one block are matched as a single block.
FlowField estimate_flow(const raw::RgbImage& ref, const raw::RgbImage& tgt, int block = 8,
                        int search_radius = 4);

/// 1 where |flow| <= threshold, 0 elsewhere; H*W entries.
SpatialMask motion_valid(const FlowField& flow, double threshold);

/// t [1,C,H,W] with every channel zeroed where |flow| > threshold. The result
/// is a constant: no gradient flows back through it.
Tensor mask_large_motion(const Tensor& t, const FlowField& flow, double threshold);

}  // namespace darkburst::motion
