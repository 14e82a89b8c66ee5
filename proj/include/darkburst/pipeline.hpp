// Copyright 2026 The darkburst Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "darkburst/checkpoint.hpp"
#include "darkburst/config.hpp"
#include "darkburst/dataset.hpp"
#include "darkburst/raw.hpp"

// Inference over a burst and dataset-level evaluation.

namespace darkburst {

struct EnhanceTimings {
  double pack_ms = 0.0;
  double coarse_ms = 0.0;
  double motion_ms = 0.0;
  double fine_ms = 0.0;
  double total_ms = 0.0;
};

struct EnhanceResult {
  raw::RgbImage image;
  EnhanceTimings timings;
  std::size_t frames_used = 0;
  float ratio = 1.0f;
};

/// Explicit ratio when given, else reference exposure / frame exposure.
float resolve_ratio(const std::vector<raw::RawFrame>& frames, std::optional<double> ratio,
                    double reference_exposure);

/// Coarse prediction per frame, fine input assembly, optional motion masking
/// against frame 0, then the set network (the single-frame network for one
/// frame). Frames beyond `config.burst_limit` are ignored.
EnhanceResult enhance(const Checkpoint& ckpt, const std::vector<raw::RawFrame>& frames, float ratio,
                      const EnhanceConfig& config);

/// The amplified input on the packed grid (coarse_raw_to_rgb), bilinearly
/// upsampled to full resolution: the no-network baseline.
raw::RgbImage amplified_input_rgb(const raw::RawFrame& frame, float ratio);

struct ImageMetrics {
  std::string name;
  double ratio = 1.0;
  std::size_t frames = 1;
  double psnr = 0.0;
  double ssim = 0.0;
  double l1 = 0.0;
  double input_psnr = 0.0;
};

struct AggregateMetrics {
  std::string label;
  double ratio = 0.0;  // 0 for the overall row
  std::size_t count = 0;
  double psnr = 0.0;
  double ssim = 0.0;
  double l1 = 0.0;
  double input_psnr = 0.0;
};

struct MetricsReport {
  std::vector<ImageMetrics> images;
  std::vector<AggregateMetrics> per_ratio;  // ascending ratio
  AggregateMetrics all;

  /// Tab-separated; infinite PSNR prints as "inf".
  std::string to_tsv() const;
};

/// Scores a prediction against ground truth; both quantized to 8 bits first.
ImageMetrics score_image(const std::string& name, double ratio, std::size_t frames, const raw::RgbImage& gt,
                         const raw::RgbImage& prediction, const raw::RgbImage& input_baseline);

/// Groups by ratio and overall; means of the per-image values.
MetricsReport build_report(std::vector<ImageMetrics> images);

/// Enhances every pair of the dataset. Throws DataError when it is empty.
MetricsReport evaluate(const Checkpoint& ckpt, const Dataset& dataset, const EnhanceConfig& config);

}  // namespace darkburst
