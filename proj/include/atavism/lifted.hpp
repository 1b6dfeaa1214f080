#pragma once

// Memory-lifted mean operator on length-l prefixes of ancestral type words.
// A prefix p = (p_0, ..., p_{l-1}) lists the l most recent ancestor types,
// own type first. The operator acts on functions f over prefixes by
//
//   (A f)(p) = sum_{j < l} tau(j) sum_t m(p_j, t) f(t . p)
//
// where t . p = (t, p_0, ..., p_{l-2}) shifts the memory window. Lookback
// depths j >= l are simply dropped (no renormalization), so A is a monotone
// truncation from below of the infinite-memory operator: its radius increases
// with depth toward the true growth rate.
//
// Prefixes are indexed base-|S| with p_0 as the most significant digit:
// the shift t . p is then pure index arithmetic, and A never needs to be
// materialized.

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "atavism/errors.hpp"
#include "atavism/model.hpp"
#include "atavism/spectral.hpp"

namespace atavism {

// Default state budget, derived from a 256 MiB cap per working vector.
inline constexpr std::int64_t kDefaultMaxStates =
    (std::int64_t(256) << 20) / sizeof(double);

struct LiftOptions {
  std::int64_t max_states = kDefaultMaxStates;
};

// Index of a prefix: p_0 is the most significant base-n digit.
std::int64_t prefix_to_index(const Prefix& p, int num_types);
Prefix index_to_prefix(std::int64_t index, int num_types, int depth);

class LiftedOperator {
 public:
  // Builds the depth-l lift of m under tau. Throws ValidationError on shape
  // problems and BudgetError when |S|^depth exceeds the state budget (the
  // error names the deepest affordable depth).
  LiftedOperator(const Eigen::MatrixXd& m, const MemoryLaw& tau, int depth,
                 const LiftOptions& opts = {});

  int depth() const { return depth_; }
  int num_types() const { return num_types_; }
  std::int64_t size() const { return size_; }
  const Eigen::MatrixXd& mean() const { return m_; }
  const MemoryLaw& tau() const { return tau_; }
  // Memory-law mass beyond the truncation horizon, a_depth.
  double truncated_mass() const { return truncated_mass_; }

  // Matrix-free action on a function over prefixes. O(size * depth) with a
  // cached per-prefix transition table when it fits the budget.
  Eigen::VectorXd apply(const Eigen::Ref<const Eigen::VectorXd>& f) const;
  // Adjoint action on measures over prefixes (scatter form).
  Eigen::VectorXd apply_adjoint(const Eigen::Ref<const Eigen::VectorXd>& g) const;

  // Largest row sum, i.e. max of apply(ones).
  double max_row_sum() const;

  // Dense materialization for inspection and small-case oracles; guarded by
  // a separate (much smaller) budget on size^2.
  Eigen::MatrixXd dense(std::int64_t max_dense_states = 4096) const;

 private:
  // w_p(t) = sum_{s'} (sum_{j: p_j = s'} tau(j)) m(s', t) for one prefix.
  // act is caller-provided scratch of length num_types.
  void row_weights(std::int64_t index, double* w, double* act) const;

  Eigen::MatrixXd m_;
  MemoryLaw tau_;
  int depth_;
  int num_types_;
  std::int64_t size_;
  std::int64_t stride_;  // num_types^(depth-1)
  double truncated_mass_;
  std::vector<double> tau_prefix_;  // tau(0..depth-1)
  std::vector<double> cache_;       // w_p(t), size * num_types, when affordable
};

struct RadiusResult {
  double value = 0;   // bracket midpoint
  double lower = 0;   // certified bounds on the truncated radius
  double upper = 0;
  std::int64_t iterations = 0;
};

// Certified spectral radius of the lift. A diagonal shift of
// 1e-3 * max_row_sum is applied before iterating (and subtracted back out)
// so possibly reducible or periodic lifts still converge; the shift moves
// the radius by exactly the shift amount, so the certificate is unaffected.
RadiusResult radius(const LiftedOperator& op, double tol = 1e-10);

// Probability distribution over depth-l prefixes.
struct PrefixDistribution {
  int depth = 0;
  int num_types = 0;
  Eigen::VectorXd weights;  // sums to 1
};

// Stationary prefix law: normalized dominant left eigenvector of the lift.
PrefixDistribution eigen_law(const LiftedOperator& op, double tol = 1e-10);

// Marginal over the first (depth-1) coordinates (drops the oldest entry).
PrefixDistribution project(const PrefixDistribution& dist);

// Point mass on one prefix.
PrefixDistribution point_mass(const Prefix& p, int num_types);

struct DepthRadius {
  int depth = 0;
  double value = 0;
  double lower = 0;
  double upper = 0;
};

// Two-sided enclosure of the infinite-memory growth rate, assembled from a
// run of truncations of increasing depth.
struct RadiusEnclosure {
  double lower = 0;               // certified: deepest truncated lower bracket
  double upper = 0;               // min(harnack_upper, perturbation_upper), or exact
  double harnack_upper = 0;       // certified bound r * max(h)/min(h)
  double perturbation_upper = 0;  // heuristic estimate r_l + a_l * max row sum
  bool exact = false;             // truncation reproduced the full operator
  bool converged = false;         // a stopping rule other than max depth fired
  int depth = 0;                  // deepest truncation computed
  std::vector<DepthRadius> trace;
};

struct ConvergeOptions {
  double tol = 1e-6;        // stop when successive radii differ by less
  int max_depth = 12;
  double inner_tol = 1e-10; // per-depth certification target
  std::int64_t max_states = kDefaultMaxStates;
};

// Runs truncations at depths 1, 2, ... and stops when the truncation is
// provably exact (bounded tau at depth > max support), when successive radii
// agree within tol, or at max_depth. Throws BudgetError if the budget runs
// out before any stopping rule fires.
RadiusEnclosure converge_radius(const Eigen::MatrixXd& m, const MemoryLaw& tau,
                                const ConvergeOptions& opts = {});

}  // namespace atavism
