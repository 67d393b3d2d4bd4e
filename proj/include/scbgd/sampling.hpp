#pragma once

#include "scbgd/block.hpp"
#include "scbgd/types.hpp"

#include <algorithm>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace scbgd {

/// Deterministic 64-bit generator used for block sampling.
///
/// Engine: std::mt19937_64 (64-bit Mersenne Twister, period 2^19937 - 1),
/// seeded through its single-integer constructor. Bounded draws use rejection
/// on the raw 64-bit output: with t = (2^64 - bound) mod bound, outputs r < t
/// are discarded and r mod bound is returned. Both steps are fully specified,
/// so trajectories are reproducible across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform double in [0, 1) built from the top 53 bits of one draw.
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  /// Uniform integer in [0, bound).
  std::uint64_t uniform_below(std::uint64_t bound) {
    const std::uint64_t threshold = (0 - bound) % bound;
    for (;;) {
      const std::uint64_t r = engine_();
      if (r >= threshold) return r % bound;
    }
  }

 private:
  std::mt19937_64 engine_;
};

/// Draws q distinct indices from {0..n-1}, each q-subset with probability 1/C(n,q).
///
/// Floyd's algorithm: for t = n-q .. n-1 draw r uniform in [0, t]; insert r
/// unless already present, in which case insert t. Result sorted ascending.
inline BlockSelection sample_block(Rng& rng, Index n, Index q) {
  if (q <= 0 || q > n) {
    throw InvalidConfigError("block size q=" + std::to_string(q) + " must satisfy 1 <= q <= n=" + std::to_string(n));
  }
  if (q == n) return BlockSelection::all(n);
  std::vector<Index> chosen;
  chosen.reserve(static_cast<std::size_t>(q));
  for (Index t = n - q; t < n; ++t) {
    const auto r = static_cast<Index>(rng.uniform_below(static_cast<std::uint64_t>(t) + 1));
    if (std::find(chosen.begin(), chosen.end(), r) == chosen.end()) {
      chosen.push_back(r);
    } else {
      chosen.push_back(t);
    }
  }
  return BlockSelection(std::move(chosen), n);
}

}  // namespace scbgd
