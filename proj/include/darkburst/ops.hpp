// Copyright 2026 The darkburst Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "darkburst/tensor.hpp"

// Differentiable operations over NCHW tensors. Shapes must match exactly;
// the only broadcast is the per-channel bias of the convolutions.

namespace darkburst {

/// Per-position validity (N*H*W bytes, nonzero = valid) broadcast over channels.
using SpatialMask = std::vector<std::uint8_t>;

/// input [N,C,H,W], kernel [F,C,kH,kW], bias [F] or undefined.
template <typename T>
BasicTensor<T> conv2d(const BasicTensor<T>& input, const BasicTensor<T>& kernel,
                      const BasicTensor<T>& bias, int stride = 1, int padding = 0);

/// Adjoint of conv2d: input [N,Cin,H,W], kernel [Cin,Cout,kH,kW], bias [Cout].
/// Output extent is (H-1)*stride - 2*padding + kH.
template <typename T>
BasicTensor<T> transpose_conv2d(const BasicTensor<T>& input, const BasicTensor<T>& kernel,
                                const BasicTensor<T>& bias, int stride = 2, int padding = 0);

/// Elementwise maximum across a set of equally shaped tensors. The value is
/// order independent; under exact ties the gradient goes to the first frame
/// in the given order.
template <typename T>
BasicTensor<T> set_max(std::span<const BasicTensor<T>> frames);

/// As set_max, but frame f only competes where valid[f] is set. Positions
/// invalid in every frame fall back to the unmasked maximum.
template <typename T>
BasicTensor<T> set_max(std::span<const BasicTensor<T>> frames,
                       std::span<const SpatialMask> valid);

template <typename T>
BasicTensor<T> leaky_relu(const BasicTensor<T>& x, T slope = T(0.2));
template <typename T>
BasicTensor<T> sigmoid(const BasicTensor<T>& x);
template <typename T>
BasicTensor<T> clamp(const BasicTensor<T>& x, T lo, T hi);

template <typename T>
BasicTensor<T> add(const BasicTensor<T>& a, const BasicTensor<T>& b);
template <typename T>
BasicTensor<T> sub(const BasicTensor<T>& a, const BasicTensor<T>& b);
template <typename T>
BasicTensor<T> mul(const BasicTensor<T>& a, const BasicTensor<T>& b);
template <typename T>
BasicTensor<T> scale(const BasicTensor<T>& x, T factor);
template <typename T>
BasicTensor<T> add_n(std::span<const BasicTensor<T>> terms);

template <typename T>
BasicTensor<T> concat(std::span<const BasicTensor<T>> parts, std::size_t axis);

/// 2x2 window, stride 2; gradient routes to the first maximal tap.
template <typename T>
BasicTensor<T> max_pool2d(const BasicTensor<T>& x);
/// [N,C,H,W] -> [N,C,1,1]
template <typename T>
BasicTensor<T> global_avg_pool(const BasicTensor<T>& x);

enum class Resize { Half, Double };

/// Bilinear resampling with half-pixel centers (align_corners = false) and
/// edge clamping. Half is an exact 2x2 box average.
template <typename T>
BasicTensor<T> bilinear_resize(const BasicTensor<T>& x, Resize factor);

/// [N,C*b*b,H,W] -> [N,C,H*b,W*b]; input channel (dy*b + dx)*C + c feeds
/// output (c, y*b + dy, x*b + dx).
template <typename T>
BasicTensor<T> depth_to_space(const BasicTensor<T>& x, std::size_t block = 2);

/// x [N,C,H,W] times gates [N,C,1,1], broadcast over space.
template <typename T>
BasicTensor<T> scale_channels(const BasicTensor<T>& x, const BasicTensor<T>& gates);

template <typename T>
BasicTensor<T> sum(const BasicTensor<T>& x);
template <typename T>
BasicTensor<T> mean(const BasicTensor<T>& x);
/// mean |a - b| as a scalar.
template <typename T>
BasicTensor<T> mean_abs_diff(const BasicTensor<T>& a, const BasicTensor<T>& b);

/// [N,...] -> [1,...] slice of batch item n.
template <typename T>
BasicTensor<T> batch_item(const BasicTensor<T>& x, std::size_t n);

/// [1,C,H,W] -> [K,C] rows at flattened spatial positions.
template <typename T>
BasicTensor<T> gather_positions(const BasicTensor<T>& x, std::span<const std::size_t> positions);

/// Elementwise multiply by a constant (untracked) mask tensor of the same shape.
template <typename T>
BasicTensor<T> apply_mask(const BasicTensor<T>& x, std::span<const T> mask);

}  // namespace darkburst
