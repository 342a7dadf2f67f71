// Copyright 2026 The lpopt Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace lpopt {

/// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad configuration values (mantissa out of range, beta outside (0,1), ...).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class DimMismatch : public Error {
 public:
  using Error::Error;
};

}  // namespace lpopt
