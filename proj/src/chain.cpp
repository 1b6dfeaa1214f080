#include "atavism/chain.hpp"

#include <algorithm>
#include <cmath>

namespace atavism {

BiasedKernel::BiasedKernel(const Eigen::MatrixXd& m, const PFTriple& pf,
                           MemoryLaw tau)
    : m_(m), mbar_(normalized(m, pf)), pf_(pf), tau_(std::move(tau)) {
  const int n = static_cast<int>(m.rows());
  log_h_.resize(n);
  for (int s = 0; s < n; ++s) log_h_(s) = std::log(pf_.h(s));
  rows_.reserve(n);
  for (int s = 0; s < n; ++s) {
    std::vector<double> row(n);
    for (int t = 0; t < n; ++t) row[t] = mbar_(s, t);
    rows_.emplace_back(row);
  }
}

StepRecord step(ChainState& state, const BiasedKernel& kernel, SplitMix64& rng) {
  std::int64_t j = kernel.tau().sample(rng);
  StepRecord rec;
  rec.activated = state.type_at(j);
  rec.current = kernel.sample_row(rec.activated, rng);
  state.push(rec.current);
  return rec;
}

TrajectoryStats run_trajectory(ChainState& state, const BiasedKernel& kernel,
                               std::int64_t k, SplitMix64& rng) {
  const int n = static_cast<int>(kernel.mean().rows());
  TrajectoryStats stats;
  stats.activated_counts = Eigen::VectorXd::Zero(n);
  stats.pair_counts = Eigen::MatrixXd::Zero(n, n);
  for (std::int64_t i = 0; i < k; ++i) {
    StepRecord rec = step(state, kernel, rng);
    stats.birkhoff_sum += kernel.log_h(rec.activated) - kernel.log_h(rec.current);
    stats.activated_counts(rec.activated) += 1;
    stats.pair_counts(rec.activated, rec.current) += 1;
    ++stats.steps;
  }
  return stats;
}

double birkhoff_gap(const BiasedKernel& kernel, const InitialMemoryRule& init,
                    std::int64_t k, SplitMix64& rng) {
  ChainState state(init);
  TrajectoryStats stats = run_trajectory(state, kernel, k, rng);
  return stats.birkhoff_mean();
}

MonteCarloEstimate many_to_one(const BiasedKernel& kernel,
                               const std::function<double(const ChainState&)>& f,
                               const InitialMemoryRule& init, int k,
                               std::int64_t n, std::uint64_t seed) {
  if (n <= 0) throw ValidationError("many_to_one needs at least one replicate");
  const double log_r = std::log(kernel.pf().r);
  double sum = 0, sumsq = 0;
  for (std::int64_t rep = 0; rep < n; ++rep) {
    SplitMix64 rng = SplitMix64::stream(seed, static_cast<std::uint64_t>(rep));
    ChainState state(init);
    TrajectoryStats stats = run_trajectory(state, kernel, k, rng);
    double x = std::exp(k * log_r + stats.log_weight()) * f(state);
    sum += x;
    sumsq += x * x;
  }
  MonteCarloEstimate est;
  est.samples = n;
  est.estimate = sum / n;
  double var = std::max(0.0, sumsq / n - est.estimate * est.estimate);
  est.std_error = n > 1 ? std::sqrt(var / (n - 1)) : 0.0;
  return est;
}

MarginalReport empirical_marginals(const BiasedKernel& kernel,
                                   const InitialMemoryRule& init,
                                   std::int64_t steps, SplitMix64& rng) {
  ChainState state(init);
  TrajectoryStats stats = run_trajectory(state, kernel, steps, rng);
  const int n = static_cast<int>(kernel.mean().rows());
  const PFTriple& pf = kernel.pf();

  MarginalReport rep;
  rep.steps = steps;
  rep.activated_freq = stats.activated_counts / static_cast<double>(steps);
  rep.pair_freq = stats.pair_counts / static_cast<double>(steps);
  rep.activated_pred.resize(n);
  rep.pair_pred.resize(n, n);
  for (int t = 0; t < n; ++t) {
    rep.activated_pred(t) = pf.rho(t) * pf.h(t);
    for (int u = 0; u < n; ++u)
      rep.pair_pred(t, u) = pf.rho(t) * kernel.mean()(t, u) * pf.h(u) / pf.r;
  }
  return rep;
}

// --------------------------------------------------------------- coupling

CouplingState make_coupling(ChainState first, ChainState second,
                            std::int64_t scan_horizon) {
  CouplingState st{std::move(first), std::move(second)};
  // Certified common-memory length; stopping the scan early only undercounts,
  // which keeps every shared-draw decision marginally correct.
  std::int64_t l = 0;
  while (l < scan_horizon && st.first.type_at(l) == st.second.type_at(l)) ++l;
  st.common_prefix = l;
  if (st.first.current_type() == st.second.current_type()) st.merge_step = 0;
  return st;
}

bool coupled_step(CouplingState& state, const BiasedKernel& kernel,
                  SplitMix64& rng) {
  const std::int64_t j = kernel.tau().sample(rng);
  bool success;
  if (j < state.common_prefix) {
    // Shared phase: one activation, one draw, both chains move together.
    int activated = state.first.type_at(j);
    int t = kernel.sample_row(activated, rng);
    state.first.push(t);
    state.second.push(t);
    state.common_prefix += 1;
    success = true;
  } else {
    // Independent phase: the draw order (first, then second) is fixed so
    // runs are reproducible.
    int act_a = state.first.type_at(j);
    int act_b = state.second.type_at(j);
    int ta = kernel.sample_row(act_a, rng);
    int tb = kernel.sample_row(act_b, rng);
    state.first.push(ta);
    state.second.push(tb);
    state.common_prefix = (ta == tb) ? state.common_prefix + 1 : 0;
    success = (act_a == act_b) && (ta == tb);
  }
  ++state.steps;
  if (!success) {
    ++state.failures;
    state.last_failure = state.steps;
  }
  if (state.merge_step < 0 &&
      state.first.current_type() == state.second.current_type())
    state.merge_step = state.steps;
  return success;
}

CouplingStats coupled_run(const BiasedKernel& kernel, ChainState first,
                          ChainState second, std::int64_t steps,
                          SplitMix64& rng, std::int64_t scan_horizon) {
  CouplingState st = make_coupling(std::move(first), std::move(second), scan_horizon);
  for (std::int64_t i = 0; i < steps; ++i) coupled_step(st, kernel, rng);
  CouplingStats out;
  out.steps = st.steps;
  out.failures = st.failures;
  out.last_failure = st.last_failure;
  out.merge_step = st.merge_step;
  out.final_common_prefix = st.common_prefix;
  return out;
}

ConsolidationBound consolidation_bound(const MemoryLaw& tau, int k_max) {
  ConsolidationBound out;
  out.k_max = k_max;
  double product = 1;
  for (int k = 1; k <= k_max; ++k) product *= std::max(0.0, 1.0 - tau.tail(k));
  out.product = product;
  // prod_{k>k_max} (1 - a_k) >= exp(-sum_{k>k_max} a_k / (1 - a_{k_max+1})),
  // since log(1-x) >= -x/(1-x) and the tails are nonincreasing. For bounded
  // laws the remaining tail is zero and the factor is exactly 1.
  double tail_sum = 0;
  if (tau.bounded()) {
    for (int k = k_max + 1; k <= tau.max_support(); ++k) tail_sum += tau.tail(k);
  } else {
    double p = tau.geometric_p();
    tail_sum = std::pow(1.0 - p, static_cast<double>(k_max + 1)) / p;
  }
  double head = tau.tail(k_max + 1);
  out.tail_factor =
      head < 1.0 ? std::exp(-tail_sum / (1.0 - head)) : 0.0;
  return out;
}

}  // namespace atavism
