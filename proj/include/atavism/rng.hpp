#pragma once

#include <cassert>
#include <cmath>
#include <cstdint>
#include <vector>

namespace atavism {

// Counter-based generator (SplitMix64). The state walks a Weyl sequence and
// each output is a strong hash of the counter, so independent streams can be
// derived from (master seed, replicate index) without overlap bookkeeping.
// All samplers below are hand-rolled on top of it: the standard library's
// distributions are implementation-defined, and reproducibility across
// platforms is part of the output contract.
class SplitMix64 {
 public:
  using result_type = std::uint64_t;

  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  // Independent stream for one replicate of a Monte Carlo run.
  static SplitMix64 stream(std::uint64_t master, std::uint64_t replicate) {
    return SplitMix64(mix(master ^ mix(0x9E3779B97F4A7C15ULL * (replicate + 1))));
  }

  std::uint64_t operator()() {
    state_ += 0x9E3779B97F4A7C15ULL;
    return mix(state_);
  }

  static constexpr std::uint64_t min() { return 0; }
  static constexpr std::uint64_t max() { return ~0ULL; }

  // Uniform on [0,1), 53-bit resolution.
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  // Uniform on (0,1]; safe as a log() argument.
  double uniform_pos() {
    return static_cast<double>(((*this)() >> 11) + 1) * 0x1.0p-53;
  }

  // Uniform integer in {0, ..., n-1}.
  int uniform_int(int n) {
    assert(n > 0);
    return static_cast<int>(uniform() * n);
  }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ULL;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBULL;
    z ^= z >> 31;
    return z;
  }

  std::uint64_t state_;
};

// Walker/Vose alias table: O(n) build, O(1) sampling from a fixed finite
// distribution. Used for memory-depth and offspring-atom draws in hot loops.
class AliasTable {
 public:
  AliasTable() = default;

  explicit AliasTable(const std::vector<double>& weights) {
    const int n = static_cast<int>(weights.size());
    assert(n > 0);
    double total = 0;
    for (double w : weights) {
      assert(w >= 0);
      total += w;
    }
    assert(total > 0);
    prob_.assign(n, 0.0);
    alias_.assign(n, 0);
    std::vector<double> scaled(n);
    std::vector<int> small, large;
    for (int i = 0; i < n; ++i) {
      scaled[i] = weights[i] * n / total;
      (scaled[i] < 1.0 ? small : large).push_back(i);
    }
    while (!small.empty() && !large.empty()) {
      int s = small.back(), l = large.back();
      small.pop_back();
      large.pop_back();
      prob_[s] = scaled[s];
      alias_[s] = l;
      scaled[l] = (scaled[l] + scaled[s]) - 1.0;
      (scaled[l] < 1.0 ? small : large).push_back(l);
    }
    for (int l : large) prob_[l] = 1.0;
    for (int s : small) prob_[s] = 1.0;  // numerical leftovers
  }

  bool empty() const { return prob_.empty(); }
  int size() const { return static_cast<int>(prob_.size()); }

  int sample(SplitMix64& rng) const {
    const int n = static_cast<int>(prob_.size());
    double un = rng.uniform() * n;
    int i = static_cast<int>(un);
    if (i >= n) i = n - 1;
    return (un - i) < prob_[i] ? i : alias_[i];
  }

 private:
  std::vector<double> prob_;
  std::vector<int> alias_;
};

// Poisson draw via Knuth's product-of-uniforms, with recursive halving for
// large rates so exp(-rate) never underflows. Rates here are offspring means
// (order 1), so the fast path is the common one.
inline int sample_poisson(double rate, SplitMix64& rng) {
  assert(rate >= 0);
  if (rate == 0) return 0;
  int total = 0;
  while (rate > 30.0) {
    // Poisson(a+b) = Poisson(a) + Poisson(b) for independent summands.
    double half = rate / 2;
    total += sample_poisson(half, rng);
    rate -= half;
  }
  const double limit = std::exp(-rate);
  int k = 0;
  double p = 1.0;
  do {
    p *= rng.uniform_pos();
    ++k;
  } while (p > limit);
  return total + k - 1;
}

// Geometric draw on {0,1,2,...} with success probability p: inverse CDF.
inline std::int64_t sample_geometric(double p, SplitMix64& rng) {
  assert(p > 0 && p <= 1);
  if (p >= 1.0) return 0;
  const double denom = std::log1p(-p);  // log(1-p) < 0
  double v = std::floor(std::log(rng.uniform_pos()) / denom);
  return static_cast<std::int64_t>(v);
}

}  // namespace atavism
