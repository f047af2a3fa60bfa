// Copyright (c) 2026 The coalsim Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <limits>

namespace coalsim {

/// Counter-based pseudo-random stream (Philox 4x32-10, as in Salmon et al.,
/// "Parallel random numbers: as easy as 1, 2, 3", SC'11).
///
/// A stream is addressed by (seed, stream_id).  Replicate k of an experiment
/// owns stream_id = base + k, so any replicate's sequence is O(1)-reachable
/// without advancing through the others, and two runs with equal
/// (seed, stream_id) produce bit-identical draws.  Streams are plain values:
/// copy or move them freely, never share one instance across threads.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream_id)
      : seed_(seed), stream_id_(stream_id) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

  /// Number of 256-bit blocks consumed so far (monotone draw counter).
  std::uint64_t counter() const { return block_; }

  std::uint64_t next_u64() {
    if (word_ >= 4) refill();
    const std::uint64_t lo = out_[word_];
    const std::uint64_t hi = out_[word_ + 1];
    word_ += 2;
    return lo | (hi << 32);
  }

  /// Uniform on [0, 1), 53-bit resolution.
  double uniform01() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  /// Uniform on (0, 1]; safe under log().
  double uniform01_open_left() { return 1.0 - uniform01(); }

 private:
  static constexpr std::uint32_t kMul0 = 0xD2511F53u;
  static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kWey0 = 0x9E3779B9u;
  static constexpr std::uint32_t kWey1 = 0xBB67AE85u;

  void refill() {
    std::uint32_t c0 = static_cast<std::uint32_t>(block_);
    std::uint32_t c1 = static_cast<std::uint32_t>(block_ >> 32);
    std::uint32_t c2 = static_cast<std::uint32_t>(stream_id_);
    std::uint32_t c3 = static_cast<std::uint32_t>(stream_id_ >> 32);
    std::uint32_t k0 = static_cast<std::uint32_t>(seed_);
    std::uint32_t k1 = static_cast<std::uint32_t>(seed_ >> 32);
    for (int round = 0; round < 10; ++round) {
      const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * c0;
      const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * c2;
      const std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
      const std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
      const std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
      const std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
      c0 = hi1 ^ c1 ^ k0;
      c1 = lo1;
      c2 = hi0 ^ c3 ^ k1;
      c3 = lo0;
      k0 += kWey0;
      k1 += kWey1;
    }
    out_[0] = c0;
    out_[1] = c1;
    out_[2] = c2;
    out_[3] = c3;
    ++block_;
    word_ = 0;
  }

  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::uint64_t block_ = 0;
  std::uint32_t out_[4] = {0, 0, 0, 0};
  int word_ = 4;  // force refill on first use
};

}  // namespace coalsim
