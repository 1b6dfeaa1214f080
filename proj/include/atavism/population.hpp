#pragma once

// Forward population simulation with ancestral memory. Individuals hold a
// parent pointer, so the memory word of any individual is read by walking up
// the genealogy; positions older than the founding generation fall through
// to the model's initial-memory rule. The tree is shared and immutable:
// siblings alias their ancestors instead of copying memory words, dead
// ancestors stay alive while any descendant needs them, and whole branches
// are reclaimed by reference counting once the last descendant is dropped.

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <vector>

#include "atavism/lifted.hpp"
#include "atavism/model.hpp"
#include "atavism/rng.hpp"

namespace atavism {

struct GenealogyNode;
using NodePtr = std::shared_ptr<const GenealogyNode>;

struct GenealogyNode {
  int type = 0;
  int generation = 0;  // 0 for founders
  NodePtr parent;      // null for founders
};

NodePtr make_founder(int type);
NodePtr make_child(int type, const NodePtr& parent);

// Type of the j-th ancestor of node (j = 0 is the node itself); ancestry
// beyond the founder is answered by the initial-memory rule.
int ancestor_type(const GenealogyNode& node, std::int64_t j,
                  const InitialMemoryRule& rule);

// One generation of living individuals.
struct Generation {
  int index = 0;
  std::vector<NodePtr> members;
};

// Offspring sampling machinery for one model (alias tables for finite
// kernels are built once here).
class OffspringSampler {
 public:
  explicit OffspringSampler(const ModelSpec& model);

  // Samples the offspring type-count vector for an individual whose
  // activated ancestor type is s.
  void sample_counts(int s, SplitMix64& rng, std::vector<int>& out) const;

 private:
  OffspringKernel kernel_;
  int num_types_;
  std::vector<AliasTable> atom_tables_;  // finite kernels only
};

// Children of one individual: sample the lookback depth, activate the
// ancestor type, then draw offspring counts from the kernel row.
std::vector<NodePtr> sample_offspring(const NodePtr& parent, const ModelSpec& model,
                                      const OffspringSampler& sampler,
                                      SplitMix64& rng);

struct RunStats {
  std::vector<std::int64_t> sizes;                    // |Z_k| per generation
  std::vector<std::vector<std::int64_t>> type_counts; // per generation, per type
  bool extinct = false;
  int extinct_at = -1;    // first empty generation
  bool truncated = false; // population exceeded the cap
  int truncated_at = -1;  // last recorded generation when truncated
  std::uint64_t seed = 0; // stream seed of this run (reproducibility)
};

// Runs the population forward k_max generations from the given founders,
// stopping early on extinction or when a generation would exceed cap.
RunStats simulate(const ModelSpec& model, const Generation& founders, int k_max,
                  std::int64_t cap, std::uint64_t seed);

// Exact E|Z_k| for bounded memory laws, via the depth-(max support + 1)
// lift: the expected size is the k-fold application of the lifted operator
// to the all-ones function, paired with the initial prefix distribution.
// Throws ValidationError for unbounded laws.
double exact_mean(const ModelSpec& model, const PrefixDistribution& initial, int k);
// Convenience overload: founders all carry the same initial prefix.
double exact_mean(const ModelSpec& model, const Prefix& initial, int k);

struct GrowthEstimate {
  std::vector<double> mean_sizes;        // average |Z_k| over contributing runs
  std::vector<std::int64_t> contributing; // runs not truncated before k
  std::vector<double> root_rates;        // (mean |Z_k|)^(1/k)
  double log_slope = 0;                  // least-squares slope of log mean size
  bool slope_defined = false;
  std::int64_t runs = 0;
  std::int64_t extinct_runs = 0;
  std::int64_t truncated_runs = 0;
};

// Monte Carlo growth-rate estimation over independent runs (per-run streams
// derived from seed). Runs that hit the cap stop contributing beyond their
// truncation point; fully extinct prefixes still count as zeros.
GrowthEstimate estimate_growth(const ModelSpec& model, const Generation& founders,
                               std::int64_t runs, int k_max, std::int64_t cap,
                               std::uint64_t seed);

}  // namespace atavism
