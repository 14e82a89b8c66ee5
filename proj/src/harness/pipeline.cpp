// Copyright 2026 The darkburst Authors
// SPDX-License-Identifier: Apache-2.0

#include "darkburst/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>

#include "darkburst/errors.hpp"
#include "darkburst/io.hpp"
#include "darkburst/metrics.hpp"
#include "darkburst/motion.hpp"
#include "darkburst/nets.hpp"
#include "darkburst/ops.hpp"

namespace darkburst {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point since) {
  return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

void check_frames(const nets::ArchConfig& arch, const std::vector<raw::RawFrame>& frames) {
  if (frames.empty()) throw DataError("burst has no frames");
  const auto& f0 = frames.front();
  for (const auto& f : frames) {
    f.validate();
    if (f.width != f0.width || f.height != f0.height || f.black_level != f0.black_level ||
        f.white_level != f0.white_level)
      throw DataError("burst frames differ in size or sensor levels");
  }
  // Packed extent must be divisible by the fine network's multiple, and by
  // twice that when the coarse network runs at half resolution.
  const std::size_t multiple = static_cast<std::size_t>(arch.spatial_multiple()) * (arch.use_coarse_to_fine ? 4 : 2);
  if (f0.width % multiple || f0.height % multiple) {
    const std::size_t pw = (multiple - f0.width % multiple) % multiple;
    const std::size_t ph = (multiple - f0.height % multiple) % multiple;
    throw DataError("raw size " + std::to_string(f0.width) + "x" + std::to_string(f0.height) +
                    " is not a multiple of " + std::to_string(multiple) + " for this checkpoint; pad by " +
                    std::to_string(pw) + " columns and " + std::to_string(ph) + " rows");
  }
}

std::string number(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::string ratio_text(double ratio) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", ratio);
  return buf;
}

AggregateMetrics aggregate(const std::string& label, double ratio, const std::vector<const ImageMetrics*>& items) {
  AggregateMetrics a{label, ratio, items.size(), 0, 0, 0, 0};
  for (const auto* m : items) {
    a.psnr += m->psnr;
    a.ssim += m->ssim;
    a.l1 += m->l1;
    a.input_psnr += m->input_psnr;
  }
  const auto n = static_cast<double>(items.size());
  a.psnr /= n;
  a.ssim /= n;
  a.l1 /= n;
  a.input_psnr /= n;
  return a;
}

}  // namespace

float resolve_ratio(const std::vector<raw::RawFrame>& frames, std::optional<double> ratio,
                    double reference_exposure) {
  if (ratio) {
    if (!(*ratio > 0.0)) throw ConfigError("ratio must be positive");
    return static_cast<float>(*ratio);
  }
  if (frames.empty()) throw DataError("burst has no frames");
  if (!(frames.front().exposure_seconds > 0.0)) throw DataError("frame exposure must be positive");
  return static_cast<float>(raw::compute_ratio(frames.front().exposure_seconds, reference_exposure));
}

EnhanceResult enhance(const Checkpoint& ckpt, const std::vector<raw::RawFrame>& all_frames, float ratio,
                      const EnhanceConfig& config) {
  NoGradGuard no_grad;
  const auto start = Clock::now();
  const auto& arch = ckpt.arch;
  std::vector<raw::RawFrame> frames = all_frames;
  if (config.burst_limit > 0 && frames.size() > static_cast<std::size_t>(config.burst_limit))
    frames.resize(static_cast<std::size_t>(config.burst_limit));
  check_frames(arch, frames);

  EnhanceResult result;
  result.ratio = ratio;
  result.frames_used = frames.size();

  auto t = Clock::now();
  std::vector<Tensor> inputs;
  for (const auto& f : frames) inputs.push_back(raw::network_input(raw::pack_bayer(f, ratio)));
  result.timings.pack_ms = elapsed_ms(t);

  t = Clock::now();
  std::vector<Tensor> coarse;
  if (arch.use_coarse_to_fine) {
    for (auto& x : inputs) {
      coarse.push_back(nets::coarse_forward(ckpt.params, arch, raw::downsample_half(x)));
      x = nets::build_fine_input(x, coarse.back());
    }
  }
  result.timings.coarse_ms = elapsed_ms(t);

  std::vector<SpatialMask> valid;
  if (config.motion.enabled && inputs.size() > 1) {
    t = Clock::now();
    const std::size_t h = inputs[0].dim(2), w = inputs[0].dim(3);
    auto to_rgb = [&](std::size_t i) {
      if (arch.use_coarse_to_fine) return raw::coarse_raw_to_rgb(raw::upsample_double(coarse[i]));
      return raw::coarse_raw_to_rgb(raw::network_input(raw::pack_bayer(frames[i], ratio)));
    };
    const auto reference = to_rgb(0);
    valid.emplace_back(h * w, 1);
    for (std::size_t i = 1; i < inputs.size(); ++i) {
      const auto flow = motion::estimate_flow(reference, to_rgb(i), config.motion.block, config.motion.search_radius);
      inputs[i] = motion::mask_large_motion(inputs[i], flow, config.motion.threshold);
      valid.push_back(motion::motion_valid(flow, config.motion.threshold));
    }
    result.timings.motion_ms = elapsed_ms(t);
  }

  t = Clock::now();
  const Tensor out = inputs.size() == 1
                         ? nets::fine_forward(ckpt.params, arch, inputs[0])
                         : nets::set_forward(ckpt.params, arch, std::span<const Tensor>(inputs),
                                             std::span<const SpatialMask>(valid));
  result.timings.fine_ms = elapsed_ms(t);
  for (float v : out.values())
    if (!std::isfinite(v)) throw NumericError("non-finite value in the enhanced image");
  result.image = raw::RgbImage::from_tensor(out);
  result.timings.total_ms = elapsed_ms(start);
  return result;
}

raw::RgbImage amplified_input_rgb(const raw::RawFrame& frame, float ratio) {
  NoGradGuard no_grad;
  const auto packed = raw::network_input(raw::pack_bayer(frame, ratio));
  const auto rgb = raw::coarse_raw_to_rgb(packed).to_tensor();
  return raw::RgbImage::from_tensor(raw::upsample_double(rgb));
}

ImageMetrics score_image(const std::string& name, double ratio, std::size_t frames, const raw::RgbImage& gt,
                         const raw::RgbImage& prediction, const raw::RgbImage& input_baseline) {
  const auto y = io::quantize8(gt);
  const auto y_hat = io::quantize8(prediction);
  const auto base = io::quantize8(input_baseline);
  ImageMetrics m{name, ratio, frames, metrics::psnr(y, y_hat), metrics::ssim(y, y_hat), 0.0, metrics::psnr(y, base)};
  double l1 = 0.0;
  for (std::size_t i = 0; i < y.pixels.size(); ++i) l1 += std::abs(static_cast<double>(y.pixels[i]) - y_hat.pixels[i]);
  m.l1 = l1 / static_cast<double>(y.pixels.size());
  return m;
}

MetricsReport build_report(std::vector<ImageMetrics> images) {
  if (images.empty()) throw DataError("no images to report");
  MetricsReport report;
  report.images = std::move(images);
  std::map<double, std::vector<const ImageMetrics*>> groups;
  std::vector<const ImageMetrics*> all;
  for (const auto& m : report.images) {
    groups[m.ratio].push_back(&m);
    all.push_back(&m);
  }
  for (const auto& [ratio, items] : groups) report.per_ratio.push_back(aggregate("x" + ratio_text(ratio), ratio, items));
  report.all = aggregate("All", 0.0, all);
  return report;
}

std::string MetricsReport::to_tsv() const {
  std::string out = "row\tname\tratio\tframes\tcount\tpsnr\tssim\tl1\tinput_psnr\n";
  for (const auto& m : images)
    out += "image\t" + m.name + "\t" + ratio_text(m.ratio) + "\t" + std::to_string(m.frames) + "\t1\t" +
           number(m.psnr) + "\t" + number(m.ssim) + "\t" + number(m.l1) + "\t" + number(m.input_psnr) + "\n";
  auto row = [&](const AggregateMetrics& a) {
    out += "group\t" + a.label + "\t" + (a.ratio > 0 ? ratio_text(a.ratio) : std::string("-")) + "\t-\t" +
           std::to_string(a.count) + "\t" + number(a.psnr) + "\t" + number(a.ssim) + "\t" + number(a.l1) + "\t" +
           number(a.input_psnr) + "\n";
  };
  for (const auto& a : per_ratio) row(a);
  row(all);
  return out;
}

MetricsReport evaluate(const Checkpoint& ckpt, const Dataset& dataset, const EnhanceConfig& config) {
  if (dataset.entries.empty()) throw DataError("dataset " + dataset.root.string() + " is empty");
  std::vector<ImageMetrics> images;
  for (const auto& e : dataset.entries) {
    const auto burst = io::read_drb(dataset.root / e.burst);
    const auto gt = io::read_ppm(dataset.root / e.ground_truth);
    const auto out = enhance(ckpt, burst.frames, static_cast<float>(e.ratio), config);
    if (out.image.width != gt.width || out.image.height != gt.height)
      throw DataError(e.scene + ": ground truth size differs from the burst");
    images.push_back(score_image(e.burst.stem().string(), e.ratio, out.frames_used, gt, out.image,
                                 amplified_input_rgb(burst.frames.front(), static_cast<float>(e.ratio))));
  }
  return build_report(std::move(images));
}

}  // namespace darkburst
