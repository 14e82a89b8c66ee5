// Copyright 2026 The darkburst Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

#include "darkburst/raw.hpp"

namespace darkburst::io {

/// Frames of one scene sharing sensor metadata and exposure.
struct Burst {
  std::vector<raw::RawFrame> frames;
};

/// Rational approximation of an exposure in seconds (denominator <= 1e6).
std::pair<std::uint32_t, std::uint32_t> exposure_fraction(double seconds);

/// ".drb" little-endian layout: "DRB1", u16 width, u16 height, u16 black,
/// u16 white, u32 exposure numerator, u32 exposure denominator, u16 frame
/// count, then frame_count * width * height u16 photosites.
void write_drb(std::ostream& os, const Burst& burst);
void write_drb(const std::filesystem::path& path, const Burst& burst);
Burst read_drb(std::istream& is);
Burst read_drb(const std::filesystem::path& path);

/// Binary P6, maxval 255.
void write_ppm(std::ostream& os, const raw::RgbImage& image);
void write_ppm(const std::filesystem::path& path, const raw::RgbImage& image);
raw::RgbImage read_ppm(std::istream& is);
raw::RgbImage read_ppm(const std::filesystem::path& path);

/// 8-bit quantization used by the PPM writer: round(clip(v) * 255) / 255.
raw::RgbImage quantize8(const raw::RgbImage& image);

/// Binary P5, maxval 65535, big-endian samples (raw visualization).
void write_pgm16(const std::filesystem::path& path, const raw::RawFrame& frame);

}  // namespace darkburst::io
