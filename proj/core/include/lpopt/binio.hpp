// Copyright 2026 The lpopt Authors
// SPDX-License-Identifier: Apache-2.0

// Flat little-endian binary records: an 8-byte magic tag followed by
// unsigned 64-bit integers and binary64 values.

#pragma once

#include <cstdint>
#include <iosfwd>
#include <string_view>

#include "lpopt/densemat.hpp"
#include "lpopt/errors.hpp"

namespace lpopt {

class FormatError : public Error {
 public:
  using Error::Error;
};

class BinWriter {
 public:
  explicit BinWriter(std::ostream& os) : os_(os) {}
  void magic(std::string_view tag);  // exactly 8 bytes
  void u64(std::uint64_t v);
  void f64(double v);
  void mat(const Mat& m);  // rows, cols, then entries row-major

 private:
  std::ostream& os_;
};

class BinReader {
 public:
  explicit BinReader(std::istream& is) : is_(is) {}
  void expect_magic(std::string_view tag);
  [[nodiscard]] std::uint64_t u64();
  [[nodiscard]] double f64();
  [[nodiscard]] Mat mat();

 private:
  std::istream& is_;
};

}  // namespace lpopt
