// Copyright (c) 2026 The coalsim Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace coalsim {

/// Partition of {0, ..., m-1} into blocks of consecutive indices, recording
/// which ordered particles have coalesced.  Stored as the exclusive end
/// index of each block; a block's leader is its smallest index.  Partitions
/// only ever coarsen (adjacent blocks merge), never split.
class IntervalPartition {
 public:
  IntervalPartition() = default;

  static IntervalPartition singletons(std::size_t m) {
    IntervalPartition p;
    p.ends_.resize(m);
    for (std::size_t i = 0; i < m; ++i) p.ends_[i] = i + 1;
    return p;
  }

  static IntervalPartition single_block(std::size_t m) {
    IntervalPartition p;
    if (m > 0) p.ends_.push_back(m);
    return p;
  }

  /// Builds from exclusive block end indices (increasing, last == m).
  static IntervalPartition from_block_ends(std::vector<std::size_t> ends) {
    std::size_t prev = 0;
    for (std::size_t e : ends) {
      if (e <= prev) throw std::invalid_argument("block ends not increasing");
      prev = e;
    }
    IntervalPartition p;
    p.ends_ = std::move(ends);
    return p;
  }

  std::size_t element_count() const {
    return ends_.empty() ? 0 : ends_.back();
  }
  std::size_t block_count() const { return ends_.size(); }

  std::size_t block_begin(std::size_t b) const {
    return b == 0 ? 0 : ends_[b - 1];
  }
  std::size_t block_end(std::size_t b) const { return ends_[b]; }
  std::size_t block_size(std::size_t b) const {
    return block_end(b) - block_begin(b);
  }
  /// Leader (minimal index) of block b.
  std::size_t leader(std::size_t b) const { return block_begin(b); }

  std::size_t block_of(std::size_t i) const {
    std::size_t lo = 0, hi = ends_.size();
    while (lo + 1 < hi) {
      const std::size_t mid = (lo + hi) / 2;
      if (block_begin(mid) <= i)
        lo = mid;
      else
        hi = mid;
    }
    return lo;
  }

  bool same_block(std::size_t i, std::size_t j) const {
    return block_of(i) == block_of(j);
  }

  /// Merges block b with block b+1.
  void merge_with_next(std::size_t b) {
    if (b + 1 >= ends_.size())
      throw std::out_of_range("merge_with_next: no next block");
    ends_.erase(ends_.begin() + static_cast<std::ptrdiff_t>(b));
  }

  /// True when `coarse` can be obtained from *this by merging blocks.
  bool refines(const IntervalPartition& other) const {
    if (element_count() != other.element_count()) return false;
    std::size_t j = 0;
    for (std::size_t e : other.ends_) {
      while (j < ends_.size() && ends_[j] < e) ++j;
      if (j >= ends_.size() || ends_[j] != e) return false;
      ++j;
    }
    return true;
  }

  bool operator==(const IntervalPartition& other) const = default;

  const std::vector<std::size_t>& block_ends() const { return ends_; }

 private:
  std::vector<std::size_t> ends_;
};

/// Broadcasts one value per block to one value per element.
inline std::vector<double> expand_block_values(
    std::span<const double> per_block, const IntervalPartition& partition) {
  if (per_block.size() != partition.block_count())
    throw std::invalid_argument("expand_block_values: block count mismatch");
  std::vector<double> out(partition.element_count());
  for (std::size_t b = 0; b < per_block.size(); ++b)
    for (std::size_t i = partition.block_begin(b); i < partition.block_end(b);
         ++i)
      out[i] = per_block[b];
  return out;
}

/// Value at each block leader (inverse of expand_block_values on states
/// where attached elements share their leader's value).
inline std::vector<double> leader_values(std::span<const double> per_element,
                                         const IntervalPartition& partition) {
  if (per_element.size() != partition.element_count())
    throw std::invalid_argument("leader_values: element count mismatch");
  std::vector<double> out(partition.block_count());
  for (std::size_t b = 0; b < out.size(); ++b)
    out[b] = per_element[partition.leader(b)];
  return out;
}

}  // namespace coalsim
