// Copyright 2026 The darkburst Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "darkburst/tensor.hpp"

namespace darkburst {

struct GradCheckReport {
  /// max over checked coordinates of |analytic - numeric| / max(|analytic|, |numeric|, 1e-8)
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  /// Coordinates whose relative error is within the tolerance passed in.
  std::size_t within_tolerance = 0;
  /// Coordinates where the loss or a derivative was not finite.
  std::size_t degenerate = 0;

  double fraction_within() const {
    return checked ? static_cast<double>(within_tolerance) / static_cast<double>(checked) : 1.0;
  }
};

/// Central-difference check of d(loss)/d(params). `loss` is re-evaluated with
/// each coordinate perturbed in place. When `max_coords_per_param` is nonzero
/// only that many evenly spaced coordinates of each tensor are probed.
GradCheckReport grad_check(const std::function<Tensor64()>& loss, std::span<Tensor64> params,
                           double step, double tolerance = 1e-4,
                           std::size_t max_coords_per_param = 0);

/// Single-input form: f(x) must be scalar. Returns the max relative error.
double grad_check(const std::function<Tensor64(const Tensor64&)>& f, const Tensor64& x,
                  double step);

}  // namespace darkburst
