// Copyright 2026 The darkburst Authors
// SPDX-License-Identifier: Apache-2.0

#include "darkburst/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>

#include "darkburst/errors.hpp"
#include "darkburst/losses.hpp"
#include "darkburst/nets.hpp"
#include "darkburst/ops.hpp"
#include "darkburst/raw.hpp"
#include "darkburst/sensor_sim.hpp"

namespace darkburst {

namespace {

std::size_t draw(std::mt19937_64& rng, std::size_t n) { return static_cast<std::size_t>(rng() % n); }

// Appends the [C, size, size] window at (y0, x0) of batch item 0 of `t`.
void append_crop(std::vector<float>& out, const Tensor& t, std::size_t y0, std::size_t x0, std::size_t size) {
  const std::size_t c = t.dim(1), h = t.dim(2), w = t.dim(3);
  const float* src = t.data();
  for (std::size_t ch = 0; ch < c; ++ch)
    for (std::size_t y = 0; y < size; ++y) {
      const float* row = src + (ch * h + y0 + y) * w + x0;
      out.insert(out.end(), row, row + size);
    }
}

struct Batch {
  std::vector<Tensor> frames;  // m tensors [B,4,p,p]
  Tensor clean_packed;         // [B,4,p,p]
  Tensor ground_truth;         // [B,3,2p,2p]
};

Batch sample_batch(const TrainConfig& config, const std::vector<TrainingSample>& samples, std::mt19937_64& rng,
                   int m) {
  const std::size_t b = config.batch_size, p = config.patch_size;
  std::vector<std::vector<float>> frames(static_cast<std::size_t>(m));
  std::vector<float> clean, gt;
  for (std::size_t i = 0; i < b; ++i) {
    const auto& s = samples[draw(rng, samples.size())];
    const std::size_t h = s.clean_packed.dim(2), w = s.clean_packed.dim(3);
    const std::size_t y0 = draw(rng, h - p + 1), x0 = draw(rng, w - p + 1);
    // Partial Fisher-Yates: m distinct frames in drawn order.
    std::vector<std::size_t> order(s.frames.size());
    std::iota(order.begin(), order.end(), 0);
    for (int k = 0; k < m; ++k) std::swap(order[static_cast<std::size_t>(k)], order[k + draw(rng, order.size() - k)]);
    for (int k = 0; k < m; ++k) append_crop(frames[static_cast<std::size_t>(k)], s.frames[order[static_cast<std::size_t>(k)]], y0, x0, p);
    append_crop(clean, s.clean_packed, y0, x0, p);
    append_crop(gt, s.ground_truth, 2 * y0, 2 * x0, 2 * p);
  }
  Batch batch;
  for (auto& f : frames) batch.frames.emplace_back(Shape{b, 4, p, p}, std::move(f));
  batch.clean_packed = Tensor({b, 4, p, p}, std::move(clean));
  batch.ground_truth = Tensor({b, 3, 2 * p, 2 * p}, std::move(gt));
  return batch;
}

bool is_coarse(const std::string& name) { return name.rfind("coarse.", 0) == 0; }

std::vector<bool> active_mask(const TrainConfig& config, Stage stage, const nets::NetParams& params) {
  std::vector<bool> active;
  for (const auto& name : params.names()) {
    const bool coarse = is_coarse(name);
    switch (stage) {
      case Stage::Coarse: active.push_back(coarse); break;
      case Stage::Fine: active.push_back(!coarse || !config.freeze_coarse_fine_stage); break;
      case Stage::Set: active.push_back(!coarse || !config.freeze_coarse_set_stage); break;
    }
  }
  return active;
}

Tensor step_loss(const TrainConfig& config, Stage stage, const nets::NetParams& params, const Batch& batch,
                 bool coarse_frozen) {
  const auto& arch = config.arch;
  if (stage == Stage::Coarse) {
    const auto pred = nets::coarse_forward(params, arch, raw::downsample_half(batch.frames[0]));
    return loss::l1_loss(raw::downsample_half(batch.clean_packed), pred);
  }
  std::vector<Tensor> inputs;
  for (const auto& x : batch.frames) {
    if (!arch.use_coarse_to_fine) {
      inputs.push_back(x);
      continue;
    }
    Tensor xc;
    if (coarse_frozen) {
      NoGradGuard guard;
      xc = nets::coarse_forward(params, arch, raw::downsample_half(x));
    } else {
      xc = nets::coarse_forward(params, arch, raw::downsample_half(x));
    }
    inputs.push_back(nets::build_fine_input(x, xc));
  }
  const Tensor prediction = inputs.size() == 1 ? nets::fine_forward(params, arch, inputs[0])
                                               : nets::set_forward(params, arch, std::span<const Tensor>(inputs));
  return loss::hybrid_loss(batch.ground_truth, prediction, config.loss);
}

void check_init(const TrainConfig& config, Stage first, const std::optional<Checkpoint>& init) {
  if (first == Stage::Coarse) return;
  const Stage needed = first == Stage::Fine ? Stage::Coarse : Stage::Fine;
  if (!init)
    throw ConfigError("stage " + to_string(first) + " needs a checkpoint from the " + to_string(needed) +
                      " stage (set train.init)");
  if (static_cast<int>(init->stage) < static_cast<int>(needed))
    throw ConfigError("stage " + to_string(first) + " needs a checkpoint trained through the " + to_string(needed) +
                      " stage; the given one stops at " + to_string(init->stage));
  if (!(init->arch == config.arch)) throw ConfigError("checkpoint architecture differs from the configured arch.*");
}

}  // namespace

Checkpoint snapshot(const Checkpoint& ckpt) {
  Checkpoint out;
  out.arch = ckpt.arch;
  out.stage = ckpt.stage;
  out.adam = ckpt.adam;
  for (std::size_t i = 0; i < ckpt.params.size(); ++i) {
    const auto& t = ckpt.params.tensors()[i];
    out.params.add(ckpt.params.names()[i], Tensor::parameter(t.shape(), {t.values().begin(), t.values().end()}));
  }
  return out;
}

double learning_rate_at(const TrainConfig& config, int step, int steps) {
  return step < static_cast<int>(std::ceil(config.lr_drop_at * steps)) ? config.learning_rate
                                                                        : config.learning_rate * config.lr_drop;
}

TrainResult train(const TrainConfig& config, const std::vector<TrainingSample>& samples,
                  const std::optional<Checkpoint>& init, const StageCallback& on_stage) {
  if (config.stages.empty()) throw ConfigError("no training stages configured");
  if (samples.empty()) throw DataError("no training samples");
  check_init(config, config.stages.front(), init);
  const auto multiple = static_cast<std::size_t>(2 * config.arch.spatial_multiple());
  if (config.patch_size % multiple != 0)
    throw ConfigError("train.patch_size " + std::to_string(config.patch_size) + " must be a multiple of " +
                      std::to_string(multiple) + " for this architecture");
  std::size_t min_frames = samples.front().frames.size();
  for (const auto& s : samples) {
    if (s.clean_packed.dim(2) < config.patch_size || s.clean_packed.dim(3) < config.patch_size)
      throw ConfigError("train.patch_size exceeds the packed extent of the training images");
    min_frames = std::min(min_frames, s.frames.size());
  }

  TrainResult result;
  if (config.stages.front() == Stage::Coarse) {
    result.checkpoint.arch = config.arch;
    result.checkpoint.params = nets::init_params(config.arch, config.init_seed);
  } else {
    result.checkpoint = snapshot(*init);
  }
  auto& ckpt = result.checkpoint;

  for (Stage stage : config.stages) {
    const int steps = config.steps_for(stage);
    const auto active = active_mask(config, stage, ckpt.params);
    const bool coarse_frozen = stage != Stage::Coarse &&
                               (stage == Stage::Fine ? config.freeze_coarse_fine_stage : config.freeze_coarse_set_stage);
    const int burst_max = stage == Stage::Set ? std::min(config.burst_max, static_cast<int>(min_frames)) : 1;
    const int burst_min = stage == Stage::Set ? std::min(config.burst_min, burst_max) : 1;
    ckpt.adam = AdamState::zeros_like(ckpt.params);
    StageLog log{stage, {}};
    for (int step = 0; step < steps; ++step) {
      std::mt19937_64 rng(sim::mix_seed(sim::mix_seed(config.seed, static_cast<std::uint64_t>(stage) + 1),
                                        static_cast<std::uint64_t>(step)));
      const int m = burst_min + static_cast<int>(draw(rng, static_cast<std::size_t>(burst_max - burst_min + 1)));
      const Batch batch = sample_batch(config, samples, rng, m);
      const Tensor loss = step_loss(config, stage, ckpt.params, batch, coarse_frozen);
      const double value = loss.item();
      if (!std::isfinite(value))
        throw NumericError("non-finite loss at " + to_string(stage) + " step " + std::to_string(step));
      const auto grads = backward(loss);
      std::vector<std::vector<float>> g;
      for (const auto& p : ckpt.params.tensors()) {
        const auto view = grads.view(p);
        g.emplace_back(view.empty() ? std::vector<float>(p.size(), 0.0f) : std::vector<float>(view.begin(), view.end()));
      }
      adam_step(ckpt.params.tensors(), g, ckpt.adam, learning_rate_at(config, step, steps), config.adam, active);
      log.losses.push_back(value);
      if (config.log_every > 0 && (step % config.log_every == 0 || step + 1 == steps))
        std::fprintf(stderr, "[%s] step %d/%d m=%d loss %.6f\n", to_string(stage).c_str(), step + 1, steps, m, value);
    }
    ckpt.stage = stage;
    if (on_stage) on_stage(ckpt, log);
    result.logs.push_back(std::move(log));
  }
  return result;
}

TrainResult train(const TrainConfig& config, const StageCallback& on_stage) {
  if (config.dataset.empty()) throw ConfigError("train.dataset is not set");
  const auto dataset = load_dataset(config.dataset);
  const auto samples = load_training_samples(dataset, config.ratio_filter);
  std::optional<Checkpoint> init;
  if (!config.init_checkpoint.empty()) init = load_checkpoint(config.init_checkpoint);
  return train(config, samples, init, on_stage);
}

}  // namespace darkburst
