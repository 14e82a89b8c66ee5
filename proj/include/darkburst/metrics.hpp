// Copyright 2026 The darkburst Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "darkburst/raw.hpp"

namespace darkburst::metrics {

/// 10 log10(1 / MSE) for data range 1; +infinity for identical images.
double psnr(const raw::RgbImage& y, const raw::RgbImage& y_hat);

/// Mean SSIM over valid 11x11 Gaussian windows (sigma 1.5) and channels,
/// C1 = 0.01^2, C2 = 0.03^2. Smaller images use the largest odd window that fits.
double ssim(const raw::RgbImage& y, const raw::RgbImage& y_hat);

}  // namespace darkburst::metrics
