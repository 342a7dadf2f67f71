// Copyright 2026 The lpopt Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>

namespace lpopt {

/// splitmix64 finalizer. Bijective on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Counter-based random stream. The k-th draw is a pure function of
/// (seed, stream_id, counter + k), so results never depend on call order
/// or on which thread performs the draw.
struct RngStream {
  std::uint64_t seed = 0;
  std::uint64_t stream_id = 0;
  std::uint64_t counter = 0;

  /// 64 random bits for draw `offset` positions past `counter`.
  [[nodiscard]] constexpr std::uint64_t bits(std::uint64_t offset = 0) const noexcept {
    std::uint64_t h = mix64(seed ^ 0x6a09e667f3bcc909ULL);
    h = mix64(h ^ stream_id);
    return mix64(h ^ (counter + offset));
  }

  /// Uniform double in [0, 1) with 53 random bits.
  [[nodiscard]] constexpr double uniform(std::uint64_t offset = 0) const noexcept {
    return static_cast<double>(bits(offset) >> 11) * 0x1.0p-53;
  }

  /// Standard normal via Box-Muller; consumes draws 2*offset and 2*offset+1.
  [[nodiscard]] double normal(std::uint64_t offset = 0) const noexcept;

  [[nodiscard]] constexpr RngStream advanced(std::uint64_t n) const noexcept {
    return RngStream{seed, stream_id, counter + n};
  }

  /// Independent child stream identified by `tag`.
  [[nodiscard]] constexpr RngStream fork(std::uint64_t tag) const noexcept {
    return RngStream{seed, mix64(stream_id ^ mix64(tag + 0x3c6ef372fe94f82bULL)), 0};
  }
};

/// Which piece of training state a random stream belongs to.
enum class StreamTag : std::uint64_t {
  Weights = 1,
  Gradients = 2,
  Moment1 = 3,
  Moment2 = 4,
  GradNoise = 5,
  Batch = 6,
  Init = 7,
};

/// Stream for (component, worker, iteration, parameter block).
[[nodiscard]] constexpr RngStream derive_stream(std::uint64_t seed, StreamTag tag,
                                                std::uint64_t worker, std::uint64_t t,
                                                std::uint64_t block = 0) noexcept {
  std::uint64_t id = mix64(static_cast<std::uint64_t>(tag));
  id = mix64(id ^ worker);
  id = mix64(id ^ t);
  id = mix64(id ^ block);
  return RngStream{seed, id, 0};
}

}  // namespace lpopt
