#include "scbgd/analysis.hpp"
#include "scbgd/sampling.hpp"

#include <gtest/gtest.h>

#include <map>
#include <vector>

namespace scbgd {
namespace {

TEST(SampleBlock, FullBlockIsAllIndices) {
  Rng rng(1);
  for (int t = 0; t < 20; ++t) {
    EXPECT_EQ(sample_block(rng, 5, 5).one_based(), (std::vector<Index>{1, 2, 3, 4, 5}));
  }
}

TEST(SampleBlock, RejectsBadSizes) {
  Rng rng(1);
  EXPECT_THROW(sample_block(rng, 4, 5), InvalidConfigError);
  EXPECT_THROW(sample_block(rng, 4, 0), InvalidConfigError);
  EXPECT_THROW(sample_block(rng, 4, -1), InvalidConfigError);
}

TEST(SampleBlock, DistinctSortedInRange) {
  Rng rng(9);
  for (int t = 0; t < 2000; ++t) {
    const auto b = sample_block(rng, 30, 7);
    ASSERT_EQ(b.size(), 7);
    for (Index i = 0; i < b.size(); ++i) {
      ASSERT_GE(b[i], 0);
      ASSERT_LT(b[i], 30);
      if (i > 0) {
        ASSERT_LT(b[i - 1], b[i]);
      }
    }
  }
}

TEST(SampleBlock, SameSeedSameSequence) {
  Rng a(42);
  Rng b(42);
  Rng c(43);
  bool differs = false;
  for (int t = 0; t < 500; ++t) {
    const auto x = sample_block(a, 100, 10);
    EXPECT_EQ(x, sample_block(b, 100, 10));
    differs = differs || !(x == sample_block(c, 100, 10));
  }
  EXPECT_TRUE(differs);
}

// Pearson chi-square over every q-subset, enumerated independently of the sampler.
double chi_square(Index n, Index q, int draws, std::uint64_t seed, std::map<std::vector<Index>, int>& counts) {
  for_each_combination(n, q, [&](const std::vector<Index>& c) { counts[c] = 0; });
  Rng rng(seed);
  for (int t = 0; t < draws; ++t) {
    const auto b = sample_block(rng, n, q);
    std::vector<Index> key(b.indices().begin(), b.indices().end());
    ++counts.at(key);
  }
  const double expected = static_cast<double>(draws) / static_cast<double>(counts.size());
  double chi2 = 0.0;
  for (const auto& [subset, count] : counts) chi2 += (count - expected) * (count - expected) / expected;
  return chi2;
}

TEST(SampleBlock, PairsOfFourAreUniform) {
  std::map<std::vector<Index>, int> counts;
  const double chi2 = chi_square(4, 2, 60000, 2718, counts);
  ASSERT_EQ(counts.size(), 6u);
  for (const auto& [subset, count] : counts) EXPECT_NEAR(count / 60000.0, 1.0 / 6.0, 0.01);
  // 5 degrees of freedom, upper 0.001 quantile.
  EXPECT_LT(chi2, 20.515);
}

TEST(SampleBlock, TriplesOfSixAreUniform) {
  std::map<std::vector<Index>, int> counts;
  const double chi2 = chi_square(6, 3, 100000, 31415, counts);
  ASSERT_EQ(counts.size(), 20u);
  // 19 degrees of freedom, upper 0.001 quantile.
  EXPECT_LT(chi2, 43.82);
}

TEST(Rng, BoundedDrawsStayInRange) {
  Rng rng(5);
  for (std::uint64_t bound : {1ULL, 2ULL, 3ULL, 7ULL, 1000ULL, (1ULL << 63) + 1}) {
    for (int t = 0; t < 200; ++t) ASSERT_LT(rng.uniform_below(bound), bound);
  }
  for (int t = 0; t < 1000; ++t) {
    const double u = rng.uniform01();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
  }
}

TEST(Combinations, CountsMatchBinomial) {
  for (Index n = 1; n <= 9; ++n) {
    for (Index q = 1; q <= n; ++q) {
      double count = 0;
      for_each_combination(n, q, [&](const std::vector<Index>&) { count += 1; });
      EXPECT_EQ(count, binomial(n, q)) << n << " choose " << q;
    }
  }
  EXPECT_EQ(binomial(8, 2), 28.0);
  EXPECT_NEAR(binomial(200, 10) / 22451004309013280.0, 1.0, 1e-12);
}

}  // namespace
}  // namespace scbgd
