#include <doctest.h>

#include <cmath>
#include <vector>

#include "atavism/rng.hpp"
#include "oracles.hpp"

using namespace atavism;

TEST_CASE("splitmix64 is deterministic and stream-splittable") {
  SplitMix64 a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a() == b());

  // Distinct streams from one master seed start differently.
  SplitMix64 s0 = SplitMix64::stream(7, 0);
  SplitMix64 s1 = SplitMix64::stream(7, 1);
  CHECK(s0() != s1());

  // Stream derivation is itself deterministic.
  SplitMix64 s0b = SplitMix64::stream(7, 0);
  SplitMix64 s0c = SplitMix64::stream(7, 0);
  CHECK(s0b() == s0c());
}

TEST_CASE("uniform stays in range with sane mean") {
  SplitMix64 rng(1);
  double sum = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    double u = rng.uniform();
    REQUIRE(u >= 0);
    REQUIRE(u < 1);
    sum += u;
  }
  // mean 1/2, sd of the mean = 1/sqrt(12 n)
  CHECK(std::abs(sum / n - 0.5) < 3.0 / std::sqrt(12.0 * n));
}

TEST_CASE("alias table reproduces its weights") {
  std::vector<double> w{0.1, 0.0, 0.4, 0.5};
  AliasTable table(w);
  SplitMix64 rng(3);
  const int n = 200000;
  std::vector<int> counts(w.size(), 0);
  for (int i = 0; i < n; ++i) ++counts[table.sample(rng)];
  CHECK(counts[1] == 0);  // zero-weight atom never drawn
  for (std::size_t i = 0; i < w.size(); ++i)
    CHECK(oracle::freq_within(counts[i], n, w[i]));
}

TEST_CASE("poisson sampler matches mean and variance") {
  SplitMix64 rng(5);
  for (double lambda : {0.3, 1.7, 42.0}) {
    const int n = 100000;
    double sum = 0, sumsq = 0;
    for (int i = 0; i < n; ++i) {
      int x = sample_poisson(lambda, rng);
      sum += x;
      sumsq += static_cast<double>(x) * x;
    }
    double mean = sum / n;
    double var = sumsq / n - mean * mean;
    // sd of the sample mean is sqrt(lambda/n)
    CHECK(std::abs(mean - lambda) < 3 * std::sqrt(lambda / n));
    // variance of a Poisson sample variance ~ lambda(1+2lambda)/n
    CHECK(std::abs(var - lambda) <
          3 * std::sqrt(lambda * (1 + 2 * lambda) / n) + 0.01);
  }
  CHECK(sample_poisson(0.0, rng) == 0);
}

TEST_CASE("geometric sampler matches tail probabilities") {
  SplitMix64 rng(9);
  const double p = 0.35;
  const int n = 200000;
  std::vector<int> tail_counts(6, 0);  // counts of draws >= k
  for (int i = 0; i < n; ++i) {
    std::int64_t x = sample_geometric(p, rng);
    REQUIRE(x >= 0);
    for (int k = 0; k < 6; ++k)
      if (x >= k) ++tail_counts[k];
  }
  for (int k = 0; k < 6; ++k)
    CHECK(oracle::freq_within(tail_counts[k], n, std::pow(1 - p, k)));
  CHECK(sample_geometric(1.0, rng) == 0);
}
