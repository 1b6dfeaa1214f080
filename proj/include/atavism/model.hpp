#pragma once

// Core domain types: the type alphabet, the memory law tau over lookback
// depths, offspring kernels, infinite initial-memory rules, and the bundled
// model specification with its validation entry point.

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "atavism/errors.hpp"
#include "atavism/rng.hpp"

namespace atavism {

// A finite memory word, most recent ancestor first: p[0] is the individual's
// own type, p[j] the type of its j-th ancestor.
using Prefix = std::vector<int>;

// Finite ordered alphabet of individual types with unique labels.
class TypeSpace {
 public:
  explicit TypeSpace(std::vector<std::string> labels);

  int size() const { return static_cast<int>(labels_.size()); }
  const std::string& label(int i) const { return labels_.at(i); }
  const std::vector<std::string>& labels() const { return labels_; }
  // Index of a label; throws ValidationError if absent.
  int index(const std::string& label) const;

 private:
  std::vector<std::string> labels_;
};

// Distribution of the lookback depth T on {0,1,2,...}: either an explicit
// finite-support vector or a geometric family (the one unbounded family the
// file format admits). Construction checks nonnegativity and unit mass; the
// model-level requirement tau(0) > 0 is deliberately left to validate() so
// degenerate laws can still be instantiated and inspected (e.g. by sweeps
// whose endpoint is the fully-shifted law).
class MemoryLaw {
 public:
  enum class Kind { kFinite, kGeometric };

  static MemoryLaw finite(std::vector<double> probs);
  static MemoryLaw geometric(double p);

  Kind kind() const { return kind_; }
  bool bounded() const { return kind_ == Kind::kFinite; }

  // P(T = j).
  double prob(std::int64_t j) const;
  // Tail a_k = P(T >= k); a_0 == 1 and a is nonincreasing with limit 0.
  double tail(std::int64_t k) const;
  // E[T]; finite for both families.
  double mean() const;
  // Largest j with tau(j) > 0. Only defined for finite laws.
  int max_support() const;
  // Geometric success parameter; only defined for geometric laws.
  double geometric_p() const;

  std::int64_t sample(SplitMix64& rng) const;

 private:
  MemoryLaw() = default;

  Kind kind_ = Kind::kFinite;
  std::vector<double> probs_;  // finite law
  std::vector<double> tails_;  // finite law, tails_[k] = sum_{j>=k} probs_[j]
  AliasTable alias_;           // finite law sampler
  double geo_p_ = 0;           // geometric law
};

// Tail of the memory law: a_k = P(T >= k).
inline double tail(const MemoryLaw& tau, std::int64_t k) { return tau.tail(k); }

// Pseudo-distance between equal-length memory words: a_L where L is the
// length of the longest common prefix (0 if the words are identical, since
// the tails vanish in the limit).
double memory_distance(const Prefix& p, const Prefix& q, const MemoryLaw& tau);

// One atom of a finite offspring distribution: a full count vector over
// types together with its probability.
struct KernelAtom {
  Eigen::VectorXi counts;
  double prob = 0;
};

// Offspring distribution per activated type. Three families:
//   - Poisson: independent Poisson counts per child type, rates = mean row;
//   - Deterministic: fixed integer count vector per activated type;
//   - Finite: explicit atoms per activated type.
// The mean matrix of the kernel must match the model's declared mean; that
// cross-check lives in validate().
class OffspringKernel {
 public:
  enum class Family { kPoisson, kDeterministic, kFinite };

  static OffspringKernel poisson(Eigen::MatrixXd means);
  static OffspringKernel deterministic(Eigen::MatrixXd counts);
  static OffspringKernel finite(std::vector<std::vector<KernelAtom>> atoms);

  Family family() const { return family_; }
  int num_types() const;
  const Eigen::MatrixXd& parameter() const { return param_; }
  const std::vector<std::vector<KernelAtom>>& atoms() const { return atoms_; }

 private:
  OffspringKernel() = default;

  Family family_ = Family::kPoisson;
  Eigen::MatrixXd param_;  // Poisson rates or deterministic counts
  std::vector<std::vector<KernelAtom>> atoms_;
};

// Mean matrix implied by a kernel: row s = expected offspring counts when
// type s is activated.
Eigen::MatrixXd mean_from_kernel(const OffspringKernel& kernel);

// Deterministic rule assigning a type to every ancestry position beyond the
// simulated horizon; evaluation at arbitrary positions is O(1) so lookups
// never need the infinite word materialized.
class InitialMemoryRule {
 public:
  enum class Kind { kConstant, kPeriodic, kIid };

  static InitialMemoryRule constant(int type);
  static InitialMemoryRule periodic(std::vector<int> word);
  // Quenched i.i.d. scenery: position j's type is a pure hash of (seed, j),
  // mapped through the given distribution. Frozen once seeded.
  static InitialMemoryRule iid(std::vector<double> probs, std::uint64_t seed);

  Kind kind() const { return kind_; }
  int type_at(std::int64_t j) const;
  // Largest type index the rule can emit (for bounds checks).
  int max_type() const;

 private:
  InitialMemoryRule() = default;

  Kind kind_ = Kind::kConstant;
  std::vector<int> word_;       // constant: size 1; periodic: the word
  std::vector<double> cdf_;     // iid: cumulative probabilities
  std::uint64_t seed_ = 0;      // iid
};

// The full model: types, mean matrix, optional explicit offspring kernel
// (Poisson with the mean rows is implied when absent), memory law, and the
// initial-memory rule used by chains and population runs.
struct ModelSpec {
  TypeSpace types;
  Eigen::MatrixXd mean;
  std::optional<OffspringKernel> kernel;
  MemoryLaw tau;
  InitialMemoryRule initial_memory;
};

struct ValidationReport {
  std::vector<std::string> failures;
  bool ok() const { return failures.empty(); }
  // Joined failure text, empty when ok.
  std::string summary() const;
};

// Checks all acceptance requirements on a model: mean entries nonnegative
// and finite, mean matrix primitive, tau(0) > 0, unit tau mass, kernel mean
// consistent with the declared mean, initial memory within type bounds.
ValidationReport validate(const ModelSpec& model);

// Throwing wrapper around validate().
void require_valid(const ModelSpec& model);

// Primitivity (irreducible + aperiodic) of a nonnegative square matrix via
// boolean powers of the support pattern: A is primitive iff pattern^w is
// entrywise positive for w = (n-1)^2 + 1. Boolean squaring keeps this
// polynomial in n without any magnitude growth.
bool is_primitive(const Eigen::MatrixXd& m);

// Convenience: the kernel actually in force (explicit or implied Poisson).
OffspringKernel effective_kernel(const ModelSpec& model);

}  // namespace atavism
