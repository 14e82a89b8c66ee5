// Copyright 2026 The darkburst Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "darkburst/config.hpp"
#include "darkburst/nets.hpp"

namespace darkburst {

/// First and second Adam moments, one buffer per parameter tensor.
struct AdamState {
  std::vector<std::vector<float>> m;
  std::vector<std::vector<float>> v;
  std::uint64_t step = 0;

  static AdamState zeros_like(const nets::NetParams& params);
};

/// Bias-corrected Adam update, in place on `params[i]` for every i with
/// `active[i]` (all when empty). Moments and values are float; the update is
/// computed in double.
void adam_step(std::vector<Tensor>& params, const std::vector<std::vector<float>>& grads, AdamState& state,
               double lr, const AdamParams& adam = {}, const std::vector<bool>& active = {});

struct Checkpoint {
  nets::ArchConfig arch;
  Stage stage = Stage::Coarse;
  nets::NetParams params;
  AdamState adam;
};

/// ".dbck": "DBCK", u16 version, u32 header length, UTF-8 header (arch
/// fields, stage, Adam step, one "tensor <name> <dims...>" line per tensor),
/// then little-endian f32 payloads in header order: parameters, first
/// moments, second moments.
void save_checkpoint(std::ostream& os, const Checkpoint& ckpt);
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(std::istream& is);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace darkburst
