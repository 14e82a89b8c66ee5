// Copyright 2026 The darkburst Authors
// SPDX-License-Identifier: Apache-2.0

#include "darkburst/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace darkburst {

GradCheckReport grad_check(const std::function<Tensor64()>& loss, std::span<Tensor64> params,
                           double step, double tolerance, std::size_t max_coords_per_param) {
  GradCheckReport report;
  const Gradients<double> grads = backward(loss());

  auto evaluate = [&]() {
    NoGradGuard guard;
    return loss().item();
  };

  for (Tensor64& p : params) {
    const Tensor64 analytic = grads.of(p);
    auto values = p.mutable_values();
    const std::size_t n = values.size();
    std::size_t stride = 1;
    if (max_coords_per_param > 0 && n > max_coords_per_param)
      stride = (n + max_coords_per_param - 1) / max_coords_per_param;
    for (std::size_t i = 0; i < n; i += stride) {
      const double saved = values[i];
      values[i] = saved + step;
      const double plus = evaluate();
      values[i] = saved - step;
      const double minus = evaluate();
      values[i] = saved;

      const double numeric = (plus - minus) / (2.0 * step);
      const double a = analytic.values()[i];
      ++report.checked;
      if (!std::isfinite(numeric) || !std::isfinite(a)) {
        ++report.degenerate;
        continue;
      }
      const double denom = std::max({std::abs(a), std::abs(numeric), 1e-8});
      const double rel = std::abs(a - numeric) / denom;
      report.max_rel_error = std::max(report.max_rel_error, rel);
      if (rel <= tolerance) ++report.within_tolerance;
    }
  }
  return report;
}

double grad_check(const std::function<Tensor64(const Tensor64&)>& f, const Tensor64& x,
                  double step) {
  std::vector<double> init(x.values().begin(), x.values().end());
  Tensor64 param = Tensor64::parameter(x.shape(), std::move(init));
  std::vector<Tensor64> params{param};
  return grad_check([&]() { return f(param); }, params, step).max_rel_error;
}

}  // namespace darkburst
