// Copyright 2026 The darkburst Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>

#include "darkburst/tensor.hpp"

namespace darkburst {

/// Malformed or inconsistent configuration (CLI exit code 2).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Unreadable, missing or inconsistent data files (CLI exit code 3).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// NaN or Inf detected in a loss or output (CLI exit code 4).
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace darkburst
