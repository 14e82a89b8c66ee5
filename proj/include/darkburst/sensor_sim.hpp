// Copyright 2026 The darkburst Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "darkburst/raw.hpp"

// Synthetic scenes and dark bursts standing in for a captured dataset.

namespace darkburst::sim {

inline constexpr double kReferenceExposure = 10.0;
inline constexpr std::uint16_t kDefaultBlack = 64;
inline constexpr std::uint16_t kDefaultWhite = 1087;

struct NoiseParams {
  double shot_gain = 200.0;   // photons per normalized unit; 0 disables shot noise
  double read_sigma = 0.002;  // normalized units
  std::uint64_t seed = 0;
};

enum class SceneKind { Gradients, Shapes, Texture };

std::string to_string(SceneKind kind);
SceneKind scene_kind_from_string(const std::string& name);

struct SceneSpec {
  std::size_t width = 64;
  std::size_t height = 64;
  SceneKind kind = SceneKind::Shapes;
  int jitter_pixels = 0;
  std::uint64_t seed = 0;
};

/// SplitMix64 finalizer over a combined key; used to derive per-item seeds.
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);

raw::RgbImage synth_scene(const SceneSpec& spec);

/// Integer translation with edge replication: out(x, y) = in(x - dx, y - dy).
raw::RgbImage translate(const raw::RgbImage& image, int dx, int dy);

/// RGGB sampling: round(black + channel * (white - black)).
raw::RawFrame mosaic(const raw::RgbImage& image, std::uint16_t black_level,
                     std::uint16_t white_level, double exposure_seconds = kReferenceExposure);

/// Scales the signal above black by 1/ratio, adds Gaussian-approximated shot
/// noise (variance signal / shot_gain) and read noise, requantizes and clips
/// to [0, white]. Exposure is divided by ratio.
raw::RawFrame darken(const raw::RawFrame& frame, double ratio, const NoiseParams& noise);

struct BurstPair {
  std::vector<raw::RawFrame> frames;
  raw::RgbImage ground_truth;
};

/// m independently jittered and noised dark frames of one clean scene.
BurstPair make_burst(const SceneSpec& spec, int m, double ratio, const NoiseParams& noise,
                     std::uint16_t black_level = kDefaultBlack,
                     std::uint16_t white_level = kDefaultWhite);

}  // namespace darkburst::sim
