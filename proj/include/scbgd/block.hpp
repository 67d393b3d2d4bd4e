#pragma once

#include "scbgd/types.hpp"

#include <algorithm>
#include <span>
#include <string>
#include <vector>

namespace scbgd {

/// A set of distinct coordinate indices, stored 0-based and ascending.
///
/// Used both for column blocks (the sampled coordinates of an SCBGD step) and
/// for row blocks. Construction validates distinctness and range; external
/// interfaces report indices 1-based through `one_based()`.
class BlockSelection {
 public:
  BlockSelection() = default;

  /// Validates `indices` (0-based) against the dimension `extent` and sorts them.
  BlockSelection(std::vector<Index> indices, Index extent) : indices_(std::move(indices)) {
    std::sort(indices_.begin(), indices_.end());
    for (std::size_t i = 0; i < indices_.size(); ++i) {
      if (indices_[i] < 0 || indices_[i] >= extent) {
        throw InvalidBlockError("block index " + std::to_string(indices_[i] + 1) +
                                " outside 1.." + std::to_string(extent));
      }
      if (i > 0 && indices_[i] == indices_[i - 1]) {
        throw InvalidBlockError("duplicate block index " + std::to_string(indices_[i] + 1));
      }
    }
  }

  static BlockSelection all(Index extent) {
    std::vector<Index> idx(static_cast<std::size_t>(extent));
    for (Index i = 0; i < extent; ++i) idx[static_cast<std::size_t>(i)] = i;
    BlockSelection b;
    b.indices_ = std::move(idx);
    return b;
  }

  static BlockSelection from_one_based(const std::vector<Index>& indices, Index extent) {
    std::vector<Index> zero(indices.size());
    std::transform(indices.begin(), indices.end(), zero.begin(), [](Index i) { return i - 1; });
    return BlockSelection(std::move(zero), extent);
  }

  [[nodiscard]] std::span<const Index> indices() const noexcept { return indices_; }
  [[nodiscard]] Index size() const noexcept { return static_cast<Index>(indices_.size()); }
  [[nodiscard]] bool empty() const noexcept { return indices_.empty(); }
  [[nodiscard]] Index operator[](Index i) const { return indices_[static_cast<std::size_t>(i)]; }

  [[nodiscard]] std::vector<Index> one_based() const {
    std::vector<Index> out(indices_.size());
    std::transform(indices_.begin(), indices_.end(), out.begin(), [](Index i) { return i + 1; });
    return out;
  }

  friend bool operator==(const BlockSelection&, const BlockSelection&) = default;

 private:
  std::vector<Index> indices_;
};

}  // namespace scbgd
