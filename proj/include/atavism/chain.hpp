#pragma once

// The biased memory chain: the type sequence seen along a distinguished
// lineage when every generation is reweighted by the Doob-normalized mean
// matrix. One step from memory (x_0, x_1, ...) samples a lookback depth
// J ~ tau, activates the ancestor type Y = x_J, draws the new type
// X ~ mbar(Y, .), and prepends X to the memory. The chain carries the full
// unbounded memory implicitly: simulated steps are stored, everything older
// is answered by the initial-memory rule in O(1).
//
// The many-to-one identity turns moments of the branching population into
// weighted expectations along this chain, with per-step weight h(Y)/h(X);
// weights are carried in log form so long trajectories cannot overflow.

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <vector>

#include "atavism/model.hpp"
#include "atavism/rng.hpp"
#include "atavism/spectral.hpp"

namespace atavism {

// Memory state: grown_ holds the simulated types (most recent last); older
// positions fall through to the initial rule.
class ChainState {
 public:
  explicit ChainState(InitialMemoryRule init) : init_(std::move(init)) {}

  // Type at lookback position j (0 = the current individual).
  int type_at(std::int64_t j) const {
    return j < steps_ ? grown_[static_cast<std::size_t>(steps_ - 1 - j)]
                      : init_.type_at(j - steps_);
  }
  int current_type() const { return type_at(0); }
  std::int64_t steps() const { return steps_; }
  const InitialMemoryRule& initial_rule() const { return init_; }

  // First k memory entries as an explicit word.
  Prefix prefix(int k) const {
    Prefix p(k);
    for (int j = 0; j < k; ++j) p[j] = type_at(j);
    return p;
  }

  void push(int type) {
    grown_.push_back(type);
    ++steps_;
  }

 private:
  InitialMemoryRule init_;
  std::vector<int> grown_;
  std::int64_t steps_ = 0;
};

// Sampling machinery for one model: the normalized transition rows as alias
// tables, the memory law, and the Perron data needed for weights.
class BiasedKernel {
 public:
  BiasedKernel(const Eigen::MatrixXd& m, const PFTriple& pf, MemoryLaw tau);

  const Eigen::MatrixXd& mean() const { return m_; }
  const Eigen::MatrixXd& normalized_matrix() const { return mbar_; }
  const PFTriple& pf() const { return pf_; }
  const MemoryLaw& tau() const { return tau_; }
  double log_h(int type) const { return log_h_(type); }

  // One draw from row s of the normalized matrix.
  int sample_row(int s, SplitMix64& rng) const { return rows_[s].sample(rng); }

 private:
  Eigen::MatrixXd m_;
  Eigen::MatrixXd mbar_;
  PFTriple pf_;
  MemoryLaw tau_;
  Eigen::VectorXd log_h_;
  std::vector<AliasTable> rows_;
};

// Result of one chain step (activated ancestor type and the new type).
struct StepRecord {
  int activated = -1;  // Y
  int current = -1;    // X
};

// Advances the chain one step; returns what was activated and drawn.
StepRecord step(ChainState& state, const BiasedKernel& kernel, SplitMix64& rng);

// Running statistics for a chain trajectory.
struct TrajectoryStats {
  std::int64_t steps = 0;
  // Sum of log h(Y_j) - log h(X_j); equals the log many-to-one weight.
  double birkhoff_sum = 0;
  Eigen::VectorXd activated_counts;        // occurrences of each Y value
  Eigen::MatrixXd pair_counts;             // occurrences of (Y, X) pairs

  double birkhoff_mean() const { return steps ? birkhoff_sum / steps : 0.0; }
  double log_weight() const { return birkhoff_sum; }
};

// Runs k steps, accumulating counts and the Birkhoff sum.
TrajectoryStats run_trajectory(ChainState& state, const BiasedKernel& kernel,
                               std::int64_t k, SplitMix64& rng);

// Time-averaged log-weight increment after k steps (one trajectory).
double birkhoff_gap(const BiasedKernel& kernel, const InitialMemoryRule& init,
                    std::int64_t k, SplitMix64& rng);

struct MonteCarloEstimate {
  double estimate = 0;
  double std_error = 0;
  std::int64_t samples = 0;
};

// Monte Carlo evaluation of the k-step mean semigroup against f:
//   (A^k f)(initial memory) = r^k E[ f(X after k steps) * weight ],
// averaged over n independent replicates with per-replicate streams derived
// from seed. f sees the full chain state (it may inspect any memory depth).
MonteCarloEstimate many_to_one(const BiasedKernel& kernel,
                               const std::function<double(const ChainState&)>& f,
                               const InitialMemoryRule& init, int k,
                               std::int64_t n, std::uint64_t seed);

// Empirical one-step marginals at stationarity versus their predictions:
// P(Y = t) = rho(t) h(t) and P(Y = t, X = u) = rho(t) m(t,u) h(u) / r.
struct MarginalReport {
  Eigen::VectorXd activated_freq;   // empirical P(Y = t)
  Eigen::VectorXd activated_pred;
  Eigen::MatrixXd pair_freq;        // empirical P(Y = t, X = u)
  Eigen::MatrixXd pair_pred;
  std::int64_t steps = 0;
};

MarginalReport empirical_marginals(const BiasedKernel& kernel,
                                   const InitialMemoryRule& init,
                                   std::int64_t steps, SplitMix64& rng);

// --------------------------------------------------------------- coupling

// Two chains driven by one noise source. Each step shares the lookback draw
// J; if J falls inside the common suffix of the two memories the activation
// and the new type are shared (a success), otherwise the two chains draw
// independently and succeed only if the draws coincide by chance. The
// common-suffix length is maintained exactly in O(1): a shared or equal draw
// extends it by one, a differing draw resets it to zero.
struct CouplingState {
  ChainState first;
  ChainState second;
  std::int64_t common_prefix = 0;  // certified common-memory length (<= truth)
  std::int64_t steps = 0;
  std::int64_t failures = 0;
  std::int64_t last_failure = -1;  // step index of the latest failure, -1 if none
  std::int64_t merge_step = -1;    // first step with equal current types, -1 if none
};

// Builds the coupled pair; the initial common-prefix scan is capped at
// scan_horizon positions (an undercount is always safe).
CouplingState make_coupling(ChainState first, ChainState second,
                            std::int64_t scan_horizon = 10000);

// One synchronous step; returns true on a successful (shared) transition.
bool coupled_step(CouplingState& state, const BiasedKernel& kernel,
                  SplitMix64& rng);

struct CouplingStats {
  std::int64_t steps = 0;
  std::int64_t failures = 0;
  std::int64_t last_failure = -1;
  std::int64_t merge_step = -1;
  std::int64_t final_common_prefix = 0;
};

CouplingStats coupled_run(const BiasedKernel& kernel, ChainState first,
                          ChainState second, std::int64_t steps,
                          SplitMix64& rng, std::int64_t scan_horizon = 10000);

// Lower bound on the probability that a coupling never fails again once the
// common suffix is long: product of (1 - a_k) for k = 1..k_max, with a
// separate estimate of the neglected tail factor prod_{k > k_max} (1 - a_k).
struct ConsolidationBound {
  double product = 0;          // prod_{k=1..k_max} (1 - a_k)
  double tail_factor = 1;      // estimated remaining factor, in (0, 1]
  int k_max = 0;
};

ConsolidationBound consolidation_bound(const MemoryLaw& tau, int k_max = 64);

}  // namespace atavism
