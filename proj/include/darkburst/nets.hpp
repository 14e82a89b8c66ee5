// Copyright 2026 The darkburst Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "darkburst/ops.hpp"
#include "darkburst/tensor.hpp"

// Coarse raw-domain U-Net, fine RGB U-Net with residual squeeze-excitation
// blocks, and the permutation-invariant burst variant of the fine network.

namespace darkburst::nets {

struct ArchConfig {
  int base_filters = 32;
  int encoder_levels = 5;
  int residual_blocks = 16;
  bool use_coarse_to_fine = true;
  bool use_residual = true;
  bool use_se = true;
  int se_reduction = 4;
  /// First encoder block (0-based) whose output is max-fused across frames.
  int fusion_start = 1;

  static ArchConfig paper() { return {}; }
  static ArchConfig desk() {
    ArchConfig c;
    c.base_filters = 8;
    c.encoder_levels = 3;
    c.residual_blocks = 4;
    return c;
  }

  int filters(int level) const { return base_filters << level; }
  int fine_input_channels() const { return use_coarse_to_fine ? 12 : 4; }
  /// Packed extents must be a multiple of this for the fine network.
  int spatial_multiple() const { return 1 << (encoder_levels - 1); }
  void validate() const;

  bool operator==(const ArchConfig&) const = default;
};

/// Named parameter tensors in a fixed insertion order.
template <typename T>
class ParamStore {
 public:
  void add(std::string name, BasicTensor<T> tensor);
  const BasicTensor<T>& get(const std::string& name) const;
  bool contains(const std::string& name) const { return index_.count(name) > 0; }

  const std::vector<std::string>& names() const { return names_; }
  std::vector<BasicTensor<T>>& tensors() { return tensors_; }
  const std::vector<BasicTensor<T>>& tensors() const { return tensors_; }
  std::size_t size() const { return tensors_.size(); }
  /// Total scalar count over tensors whose name starts with `prefix`.
  std::size_t scalar_count(const std::string& prefix = "") const;

  /// Deep copy with fresh tracked leaves in another precision.
  template <typename U>
  ParamStore<U> cast() const {
    ParamStore<U> out;
    for (std::size_t i = 0; i < tensors_.size(); ++i) {
      auto v = tensors_[i].template cast<U>();
      out.add(names_[i], BasicTensor<U>::parameter(v.shape(), {v.values().begin(), v.values().end()}));
    }
    return out;
  }

 private:
  std::vector<std::string> names_;
  std::vector<BasicTensor<T>> tensors_;
  std::map<std::string, std::size_t> index_;
};

using NetParams = ParamStore<float>;

/// Seeded He-normal kernels (variance 2 / fan_in) for both the coarse
/// ("coarse.*") and fine ("fine.*") networks, zero biases, with three
/// exceptions: transposed convs use variance 1 / fan_in, residual branches
/// close with an extra 1/sqrt(residual_blocks), and heads start with zero
/// weights (fine head bias 0.5, mid-range of its clip).
NetParams init_params(const ArchConfig& config, std::uint64_t seed);

/// x_low [N,4,h,w] -> [N,4,h,w] in (0,1) (sigmoid head).
template <typename T>
BasicTensor<T> coarse_forward(const ParamStore<T>& params, const ArchConfig& config,
                              const BasicTensor<T>& x_low);

/// Concatenation (x, x - up(x_coarse), up(x_coarse)) along channels.
template <typename T>
BasicTensor<T> build_fine_input(const BasicTensor<T>& x, const BasicTensor<T>& x_coarse);

/// t [N,12,H,W] -> RGB [N,3,2H,2W] clipped to [0,1].
template <typename T>
BasicTensor<T> fine_forward(const ParamStore<T>& params, const ArchConfig& config,
                            const BasicTensor<T>& t);

/// Burst form of fine_forward sharing its parameters. Frames run through the
/// encoder separately until `fusion_start`, after which features are replaced
/// by their cross-frame maximum; every skip connection carries max-fused
/// features. Optional `valid` masks (one per frame, N*H*W at input
/// resolution) exclude positions from the fusion.
template <typename T>
BasicTensor<T> set_forward(const ParamStore<T>& params, const ArchConfig& config,
                           std::span<const BasicTensor<T>> frames,
                           std::span<const SpatialMask> valid = {});

/// Channel attention: x * sigmoid(fc2(lrelu(fc1(avgpool(x))))), parameters
/// under `prefix` + ".fc1" / ".fc2".
template <typename T>
BasicTensor<T> se_block(const ParamStore<T>& params, const std::string& prefix,
                        const BasicTensor<T>& x);

/// Names of the parameters a network reads, for capacity checks.
std::vector<std::string> fine_param_names(const NetParams& params);
std::vector<std::string> coarse_param_names(const NetParams& params);

}  // namespace darkburst::nets
