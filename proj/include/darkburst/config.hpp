// Copyright 2026 The darkburst Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "darkburst/losses.hpp"
#include "darkburst/motion.hpp"
#include "darkburst/nets.hpp"
#include "darkburst/sensor_sim.hpp"

// Line-oriented "key = value" configuration with dotted keys. Unknown keys,
// duplicate keys and malformed values raise ConfigError.

namespace darkburst {

enum class Stage { Coarse, Fine, Set };

std::string to_string(Stage stage);
Stage stage_from_string(const std::string& name);

struct AdamParams {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct DatasetConfig {
  std::size_t count = 200;
  std::size_t width = 64;
  std::size_t height = 64;
  std::vector<double> ratios{100.0, 250.0, 300.0};
  int frames = 8;
  int jitter = 0;
  /// "mixed" cycles through every scene kind.
  std::string kind = "mixed";
  double shot_gain = 200.0;
  double read_sigma = 0.002;
  std::uint16_t black_level = sim::kDefaultBlack;
  std::uint16_t white_level = sim::kDefaultWhite;
  std::uint64_t seed = 1;
};

struct TrainConfig {
  std::vector<Stage> stages{Stage::Coarse, Stage::Fine, Stage::Set};
  int coarse_steps = 300;
  int fine_steps = 300;
  int set_steps = 200;
  double learning_rate = 1e-3;
  /// The rate is multiplied by lr_drop once lr_drop_at of a stage has elapsed.
  double lr_drop = 0.1;
  double lr_drop_at = 0.5;
  std::size_t batch_size = 4;
  /// Packed (half-resolution) patch extent.
  std::size_t patch_size = 32;
  int burst_min = 1;
  int burst_max = 8;
  bool freeze_coarse_fine_stage = false;
  bool freeze_coarse_set_stage = true;
  std::uint64_t seed = 7;
  std::uint64_t init_seed = 11;
  std::filesystem::path dataset;
  /// Checkpoint the first configured stage resumes from.
  std::filesystem::path init_checkpoint;
  /// Only pairs with this ratio are used; 0 keeps every pair.
  double ratio_filter = 0.0;
  int log_every = 0;
  AdamParams adam;
  loss::LossConfig loss;
  nets::ArchConfig arch = nets::ArchConfig::desk();

  int steps_for(Stage stage) const;
};

struct EnhanceConfig {
  int burst_limit = 0;  // 0 = every frame
  double reference_exposure = sim::kReferenceExposure;
  motion::MotionParams motion;
};

struct Config {
  DatasetConfig data;
  TrainConfig train;
  EnhanceConfig enhance;
};

/// Raw key/value pairs in file order.
std::map<std::string, std::string> parse_key_values(const std::string& text);

/// Applies known keys over defaults. "arch.preset" (desk | paper) is applied
/// before the individual arch.* keys regardless of position.
Config parse_config(const std::string& text);
Config load_config(const std::filesystem::path& path);

/// All keys the parser accepts, for help output.
std::vector<std::string> known_config_keys();

}  // namespace darkburst
