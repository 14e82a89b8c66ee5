// Copyright 2026 The darkburst Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "darkburst/tensor.hpp"

namespace darkburst::loss {

enum class CxNormalization {
  /// CX_ij = w_ij / sum_k w_ik, relative distances over the same index k.
  Row,
  /// CX_ij = w_ij / sum_k w_kj, relative distances over k in the first index.
  Column,
};

struct CxParams {
  double h = 0.5;
  double epsilon = 1e-5;
  CxNormalization normalization = CxNormalization::Row;
};

enum class LossMode { L1, L1Perceptual, L1Contextual };

std::string to_string(LossMode mode);
LossMode loss_mode_from_string(const std::string& name);

struct LossConfig {
  LossMode mode = LossMode::L1Contextual;
  double pixel_weight = 1.0;
  double feature_weight = 1.0;
  std::vector<int> levels{1, 2};
  CxParams cx;
  /// Cap on positions per feature map entering the O(N^2) statistic.
  std::size_t max_positions = 1024;
};

/// Number of pyramid levels the fixed extractor provides.
inline constexpr int kFeatureLevels = 4;

/// Mean absolute difference.
template <typename T>
BasicTensor<T> l1_loss(const BasicTensor<T>& y, const BasicTensor<T>& y_hat);

/// Fixed, seeded random conv pyramid over [N,3,H,W] images: per level two
/// 3x3 conv + leaky_relu layers, 2x max pooling between levels. Returns the
/// [N,C,h,w] maps of the requested levels in order.
template <typename T>
std::vector<BasicTensor<T>> feature_extract(const BasicTensor<T>& image, std::span<const int> levels);

/// Contextual similarity of two feature sets given as [N,C] rows:
/// (1/N) sum_j max_i CX_ij with cosine distances d_ij.
template <typename T>
BasicTensor<T> cx_similarity(const BasicTensor<T>& r, const BasicTensor<T>& s, const CxParams& params);

/// Sum over levels of mean |phi(y) - phi(y_hat)|.
template <typename T>
BasicTensor<T> perceptual_loss(const BasicTensor<T>& y, const BasicTensor<T>& y_hat,
                               std::span<const int> levels);

/// Sum over levels of -log CX(phi(y), phi(y_hat)), averaged over the batch.
template <typename T>
BasicTensor<T> contextual_loss(const BasicTensor<T>& y, const BasicTensor<T>& y_hat,
                               std::span<const int> levels, const CxParams& params,
                               std::size_t max_positions = 1024);

template <typename T>
BasicTensor<T> hybrid_loss(const BasicTensor<T>& y, const BasicTensor<T>& y_hat, const LossConfig& config);

/// Seeded subset (sorted) of `count` positions out of `area`, or all of them.
std::vector<std::size_t> sample_positions(std::size_t area, std::size_t count, std::uint64_t seed);

}  // namespace darkburst::loss
