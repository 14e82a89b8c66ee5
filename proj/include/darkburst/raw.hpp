// Copyright 2026 The darkburst Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "darkburst/tensor.hpp"

// Bayer sensor data and the packed 4-channel domain the networks consume.
// The CFA is always RGGB: (0,0)=R, (0,1)=G1, (1,0)=G2, (1,1)=B.

namespace darkburst::raw {

struct RawFrame {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint16_t> values;  // row-major photosites
  std::uint16_t black_level = 0;
  std::uint16_t white_level = 0;
  double exposure_seconds = 1.0;

  std::uint16_t at(std::size_t x, std::size_t y) const { return values[y * width + x]; }
  /// Throws DataError when dimensions, levels or photosite values are invalid.
  void validate() const;
};

/// [1,4,H/2,W/2] tensor, channels R, G1, G2, B, plus the gain applied.
struct PackedRaw {
  Tensor data;
  float ratio = 1.0f;

  std::size_t height() const { return data.dim(2); }
  std::size_t width() const { return data.dim(3); }
};

/// Interleaved HWC float image.
struct RgbImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<float> pixels;

  RgbImage() = default;
  RgbImage(std::size_t w, std::size_t h, float fill = 0.0f)
      : width(w), height(h), pixels(w * h * 3, fill) {}

  float& at(std::size_t x, std::size_t y, std::size_t c) { return pixels[(y * width + x) * 3 + c]; }
  float at(std::size_t x, std::size_t y, std::size_t c) const {
    return pixels[(y * width + x) * 3 + c];
  }

  /// [1,3,H,W]
  Tensor to_tensor() const;
  /// Batch item `n` of a [N,3,H,W] tensor, clipped to [0,1].
  static RgbImage from_tensor(const Tensor& t, std::size_t n = 0);
};

/// clip((raw - black) / (white - black), 0, 1) * ratio per photosite, one
/// 4-channel pixel per 2x2 tile.
PackedRaw pack_bayer(const RawFrame& frame, float ratio);

/// reference / input exposure.
double compute_ratio(double input_exposure, double reference_exposure);

/// Bilinear factor-2 resampling of [N,C,H,W] tensors (half-pixel centers).
Tensor downsample_half(const Tensor& x);
Tensor upsample_double(const Tensor& x);
PackedRaw downsample_half(const PackedRaw& x);
PackedRaw upsample_double(const PackedRaw& x);

/// x - upsample_double(coarse); signed. `coarse` must be exactly half of x.
Tensor noise_map(const Tensor& x, const Tensor& coarse);
PackedRaw noise_map(const PackedRaw& x, const PackedRaw& coarse);

/// R <- ch0, G <- (ch1 + ch2) / 2, B <- ch3, clipped to [0,1], on the packed grid.
RgbImage coarse_raw_to_rgb(const PackedRaw& coarse);
RgbImage coarse_raw_to_rgb(const Tensor& packed, std::size_t n = 0);

/// Packed values clipped to [0,1], the saturation the networks see.
Tensor network_input(const PackedRaw& packed);

}  // namespace darkburst::raw
