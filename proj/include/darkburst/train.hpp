// Copyright 2026 The darkburst Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "darkburst/checkpoint.hpp"
#include "darkburst/config.hpp"
#include "darkburst/dataset.hpp"

namespace darkburst {

struct StageLog {
  Stage stage = Stage::Coarse;
  std::vector<double> losses;  // one per step
};

struct TrainResult {
  Checkpoint checkpoint;
  std::vector<StageLog> logs;
};

using StageCallback = std::function<void(const Checkpoint&, const StageLog&)>;

/// Runs the configured stages in order. The first stage starts from `init`
/// (required unless it is the coarse stage, which starts from fresh
/// parameters). Fully determined by the config, the samples and `init`.
TrainResult train(const TrainConfig& config, const std::vector<TrainingSample>& samples,
                  const std::optional<Checkpoint>& init = std::nullopt, const StageCallback& on_stage = {});

/// Loads the dataset and `config.init_checkpoint` (when set), then trains.
TrainResult train(const TrainConfig& config, const StageCallback& on_stage = {});

/// Deep copy whose parameter storage is independent of `ckpt`.
Checkpoint snapshot(const Checkpoint& ckpt);

/// Learning rate at `step` of a stage of `steps` steps.
double learning_rate_at(const TrainConfig& config, int step, int steps);

}  // namespace darkburst
