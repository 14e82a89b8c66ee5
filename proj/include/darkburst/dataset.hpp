// Copyright 2026 The darkburst Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "darkburst/config.hpp"
#include "darkburst/raw.hpp"

namespace darkburst {

/// One (ground truth, dark burst) pair; paths relative to the dataset root.
struct ManifestEntry {
  std::string scene;
  std::uint64_t seed = 0;
  std::string kind;
  double ratio = 1.0;
  std::filesystem::path ground_truth;
  std::filesystem::path burst;
};

struct Dataset {
  std::filesystem::path root;
  std::vector<ManifestEntry> entries;
};

inline constexpr const char* kManifestName = "manifest.tsv";

/// Writes `count` ground-truth PPMs, one .drb burst per (scene, ratio) and a
/// tab-separated manifest. Scene i uses seed mix_seed(config.seed, i).
Dataset gen_dataset(const DatasetConfig& config, const std::filesystem::path& out_dir);

/// Reads `<dir>/manifest.tsv`; every listed file must exist.
Dataset load_dataset(const std::filesystem::path& dir);

/// Training-ready tensors of one pair.
struct TrainingSample {
  std::vector<Tensor> frames;  // network inputs [1,4,h,w], clipped
  Tensor clean_packed;         // [1,4,h,w] ground truth in the raw domain
  Tensor ground_truth;         // [1,3,2h,2w]
  double ratio = 1.0;
};

/// Loads every pair (or only those at `ratio_filter` when nonzero).
std::vector<TrainingSample> load_training_samples(const Dataset& dataset, double ratio_filter = 0.0);

/// Scene kind of scene `index` under a configured kind ("mixed" cycles).
std::string scene_kind_for(const std::string& configured, std::size_t index);

}  // namespace darkburst
