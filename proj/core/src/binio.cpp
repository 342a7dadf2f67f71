// Copyright 2026 The lpopt Authors
// SPDX-License-Identifier: Apache-2.0

#include "lpopt/binio.hpp"

#include <array>
#include <bit>
#include <istream>
#include <ostream>
#include <string>

namespace lpopt {

namespace {

constexpr std::uint64_t kMaxEntries = std::uint64_t{1} << 32;

}  // namespace

void BinWriter::magic(std::string_view tag) {
  if (tag.size() != 8) throw InvalidArgument("magic tag must be 8 bytes");
  os_.write(tag.data(), 8);
}

void BinWriter::u64(std::uint64_t v) {
  std::array<char, 8> buf{};
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  os_.write(buf.data(), 8);
}

void BinWriter::f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }

void BinWriter::mat(const Mat& m) {
  u64(m.rows());
  u64(m.cols());
  for (double v : m.data()) f64(v);
}

void BinReader::expect_magic(std::string_view tag) {
  std::array<char, 8> buf{};
  if (!is_.read(buf.data(), 8)) throw FormatError("truncated header");
  if (std::string_view(buf.data(), 8) != tag) {
    throw FormatError("bad magic: expected " + std::string(tag));
  }
}

std::uint64_t BinReader::u64() {
  std::array<unsigned char, 8> buf{};
  if (!is_.read(reinterpret_cast<char*>(buf.data()), 8)) throw FormatError("unexpected end of data");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= std::uint64_t{buf[i]} << (8 * i);
  return v;
}

double BinReader::f64() { return std::bit_cast<double>(u64()); }

Mat BinReader::mat() {
  const std::uint64_t rows = u64();
  const std::uint64_t cols = u64();
  if (rows != 0 && cols > kMaxEntries / rows) throw FormatError("matrix too large");
  Mat out(rows, cols);
  for (auto& v : out.data()) v = f64();
  return out;
}

}  // namespace lpopt
