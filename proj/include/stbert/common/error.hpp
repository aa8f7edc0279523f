// Copyright 2026 The stbert Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace stbert {

/// Raised for malformed or inconsistent data: corpus files, checkpoints,
/// configuration values, sequences that violate a layout contract.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace stbert
