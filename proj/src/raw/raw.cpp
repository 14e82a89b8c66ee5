// Copyright 2026 The darkburst Authors
// SPDX-License-Identifier: Apache-2.0

#include "darkburst/raw.hpp"

#include <algorithm>
#include <string>

#include "darkburst/errors.hpp"
#include "darkburst/ops.hpp"

namespace darkburst::raw {

void RawFrame::validate() const {
  if (width == 0 || height == 0 || width % 2 != 0 || height % 2 != 0)
    throw DataError("raw frame must have even positive dimensions, got " + std::to_string(width) +
                    "x" + std::to_string(height));
  if (values.size() != width * height)
    throw DataError("raw frame holds " + std::to_string(values.size()) + " photosites, expected " +
                    std::to_string(width * height));
  if (white_level <= black_level)
    throw DataError("white level " + std::to_string(white_level) + " must exceed black level " +
                    std::to_string(black_level));
  if (!(exposure_seconds > 0.0)) throw DataError("exposure must be positive");
  for (std::uint16_t v : values)
    if (v > white_level)
      throw DataError("photosite value " + std::to_string(v) + " above white level " +
                      std::to_string(white_level));
}

Tensor RgbImage::to_tensor() const {
  std::vector<float> out(width * height * 3);
  const std::size_t area = width * height;
  for (std::size_t i = 0; i < area; ++i)
    for (std::size_t c = 0; c < 3; ++c) out[c * area + i] = pixels[i * 3 + c];
  return Tensor({1, 3, height, width}, std::move(out));
}

RgbImage RgbImage::from_tensor(const Tensor& t, std::size_t n) {
  if (t.rank() != 4 || t.dim(1) != 3 || n >= t.dim(0))
    throw ShapeError("RgbImage::from_tensor expects [N,3,H,W], got " + shape_str(t.shape()));
  RgbImage img(t.dim(3), t.dim(2));
  const std::size_t area = img.width * img.height;
  const float* base = t.data() + n * 3 * area;
  for (std::size_t i = 0; i < area; ++i)
    for (std::size_t c = 0; c < 3; ++c) img.pixels[i * 3 + c] = std::clamp(base[c * area + i], 0.0f, 1.0f);
  return img;
}

PackedRaw pack_bayer(const RawFrame& frame, float ratio) {
  if (!(ratio > 0.0f)) throw std::invalid_argument("amplification ratio must be positive");
  if (frame.width % 2 != 0 || frame.height % 2 != 0 || frame.width == 0 || frame.height == 0)
    throw DataError("cannot pack a frame with odd dimensions " + std::to_string(frame.width) + "x" +
                    std::to_string(frame.height));
  const std::size_t ph = frame.height / 2, pw = frame.width / 2, area = ph * pw;
  const double black = frame.black_level;
  const double range = static_cast<double>(frame.white_level) - black;
  std::vector<float> out(4 * area);
  static constexpr std::size_t dy[4] = {0, 0, 1, 1};
  static constexpr std::size_t dx[4] = {0, 1, 0, 1};
  for (std::size_t y = 0; y < ph; ++y)
    for (std::size_t x = 0; x < pw; ++x)
      for (std::size_t c = 0; c < 4; ++c) {
        double v = (frame.at(2 * x + dx[c], 2 * y + dy[c]) - black) / range;
        out[c * area + y * pw + x] = static_cast<float>(std::clamp(v, 0.0, 1.0) * ratio);
      }
  return {Tensor({1, 4, ph, pw}, std::move(out)), ratio};
}

double compute_ratio(double input_exposure, double reference_exposure) {
  if (!(input_exposure > 0.0) || !(reference_exposure > 0.0))
    throw std::invalid_argument("exposure times must be positive");
  return reference_exposure / input_exposure;
}

Tensor downsample_half(const Tensor& x) {
  NoGradGuard guard;
  return bilinear_resize(x, Resize::Half);
}

Tensor upsample_double(const Tensor& x) {
  NoGradGuard guard;
  return bilinear_resize(x, Resize::Double);
}

PackedRaw downsample_half(const PackedRaw& x) { return {downsample_half(x.data), x.ratio}; }
PackedRaw upsample_double(const PackedRaw& x) { return {upsample_double(x.data), x.ratio}; }

Tensor noise_map(const Tensor& x, const Tensor& coarse) {
  if (x.rank() != 4 || coarse.rank() != 4 || x.dim(0) != coarse.dim(0) ||
      x.dim(1) != coarse.dim(1) || x.dim(2) != 2 * coarse.dim(2) || x.dim(3) != 2 * coarse.dim(3))
    throw ShapeError("noise_map: coarse " + shape_str(coarse.shape()) + " is not half of " +
                     shape_str(x.shape()));
  return sub(x, bilinear_resize(coarse, Resize::Double));
}

PackedRaw noise_map(const PackedRaw& x, const PackedRaw& coarse) {
  NoGradGuard guard;
  return {noise_map(x.data, coarse.data), x.ratio};
}

RgbImage coarse_raw_to_rgb(const Tensor& packed, std::size_t n) {
  if (packed.rank() != 4 || packed.dim(1) != 4 || n >= packed.dim(0))
    throw ShapeError("coarse_raw_to_rgb expects [N,4,H,W], got " + shape_str(packed.shape()));
  const std::size_t h = packed.dim(2), w = packed.dim(3), area = h * w;
  const float* base = packed.data() + n * 4 * area;
  RgbImage img(w, h);
  for (std::size_t i = 0; i < area; ++i) {
    img.pixels[i * 3 + 0] = std::clamp(base[i], 0.0f, 1.0f);
    img.pixels[i * 3 + 1] = std::clamp((base[area + i] + base[2 * area + i]) * 0.5f, 0.0f, 1.0f);
    img.pixels[i * 3 + 2] = std::clamp(base[3 * area + i], 0.0f, 1.0f);
  }
  return img;
}

RgbImage coarse_raw_to_rgb(const PackedRaw& coarse) { return coarse_raw_to_rgb(coarse.data, 0); }

Tensor network_input(const PackedRaw& packed) {
  NoGradGuard guard;
  return clamp(packed.data, 0.0f, 1.0f);
}

}  // namespace darkburst::raw
