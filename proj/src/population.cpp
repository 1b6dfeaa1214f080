#include "atavism/population.hpp"

#include <cmath>

namespace atavism {

NodePtr make_founder(int type) {
  return std::make_shared<const GenealogyNode>(GenealogyNode{type, 0, nullptr});
}

NodePtr make_child(int type, const NodePtr& parent) {
  return std::make_shared<const GenealogyNode>(
      GenealogyNode{type, parent->generation + 1, parent});
}

int ancestor_type(const GenealogyNode& node, std::int64_t j,
                  const InitialMemoryRule& rule) {
  const GenealogyNode* cur = &node;
  std::int64_t remaining = j;
  while (remaining > 0 && cur->parent) {
    cur = cur->parent.get();
    --remaining;
  }
  // remaining == 0: landed on a simulated ancestor. Otherwise the walk hit a
  // founder with `remaining` positions still to go; the founder itself is a
  // simulated individual, so position 1 past it is the rule's position 0.
  return remaining == 0 ? cur->type : rule.type_at(remaining - 1);
}

OffspringSampler::OffspringSampler(const ModelSpec& model)
    : kernel_(effective_kernel(model)), num_types_(model.types.size()) {
  if (kernel_.family() == OffspringKernel::Family::kFinite) {
    atom_tables_.reserve(kernel_.atoms().size());
    for (const auto& row : kernel_.atoms()) {
      std::vector<double> probs;
      probs.reserve(row.size());
      for (const auto& atom : row) probs.push_back(atom.prob);
      atom_tables_.emplace_back(probs);
    }
  }
}

void OffspringSampler::sample_counts(int s, SplitMix64& rng,
                                     std::vector<int>& out) const {
  out.assign(num_types_, 0);
  switch (kernel_.family()) {
    case OffspringKernel::Family::kPoisson:
      for (int t = 0; t < num_types_; ++t)
        out[t] = sample_poisson(kernel_.parameter()(s, t), rng);
      break;
    case OffspringKernel::Family::kDeterministic:
      for (int t = 0; t < num_types_; ++t)
        out[t] = static_cast<int>(kernel_.parameter()(s, t));
      break;
    case OffspringKernel::Family::kFinite: {
      const KernelAtom& atom = kernel_.atoms()[s][atom_tables_[s].sample(rng)];
      for (int t = 0; t < num_types_; ++t) out[t] = atom.counts(t);
      break;
    }
  }
}

std::vector<NodePtr> sample_offspring(const NodePtr& parent, const ModelSpec& model,
                                      const OffspringSampler& sampler,
                                      SplitMix64& rng) {
  std::int64_t j = model.tau.sample(rng);
  int activated = ancestor_type(*parent, j, model.initial_memory);
  std::vector<int> counts;
  sampler.sample_counts(activated, rng, counts);
  std::vector<NodePtr> children;
  std::size_t total = 0;
  for (int c : counts) total += c;
  children.reserve(total);
  for (int t = 0; t < static_cast<int>(counts.size()); ++t)
    for (int c = 0; c < counts[t]; ++c) children.push_back(make_child(t, parent));
  return children;
}

RunStats simulate(const ModelSpec& model, const Generation& founders, int k_max,
                  std::int64_t cap, std::uint64_t seed) {
  OffspringSampler sampler(model);
  SplitMix64 rng(seed);
  const int n = model.types.size();

  RunStats stats;
  stats.seed = seed;
  auto record = [&](const std::vector<NodePtr>& members) {
    stats.sizes.push_back(static_cast<std::int64_t>(members.size()));
    std::vector<std::int64_t> counts(n, 0);
    for (const auto& node : members) ++counts[node->type];
    stats.type_counts.push_back(std::move(counts));
  };

  std::vector<NodePtr> current = founders.members;
  record(current);
  if (current.empty()) {
    stats.extinct = true;
    stats.extinct_at = 0;
    return stats;
  }
  std::vector<int> counts;

  for (int k = 1; k <= k_max; ++k) {
    std::vector<NodePtr> next;
    bool over = false;
    for (const NodePtr& parent : current) {
      std::int64_t j = model.tau.sample(rng);
      int activated = ancestor_type(*parent, j, model.initial_memory);
      sampler.sample_counts(activated, rng, counts);
      for (int t = 0; t < n; ++t)
        for (int c = 0; c < counts[t]; ++c) next.push_back(make_child(t, parent));
      if (static_cast<std::int64_t>(next.size()) > cap) {
        over = true;
        break;
      }
    }
    if (over) {
      stats.truncated = true;
      stats.truncated_at = k - 1;  // last fully recorded generation
      break;
    }
    current = std::move(next);
    record(current);
    if (current.empty()) {
      stats.extinct = true;
      stats.extinct_at = k;
      break;
    }
  }
  return stats;
}

double exact_mean(const ModelSpec& model, const PrefixDistribution& initial, int k) {
  if (!model.tau.bounded())
    throw ValidationError("exact means need a bounded memory law");
  if (k < 0) throw ValidationError("exact_mean needs k >= 0");
  const int depth = model.tau.max_support() + 1;
  if (initial.depth != depth)
    throw ValidationError("initial prefix distribution has the wrong depth");
  LiftedOperator op(model.mean, model.tau, depth);
  Eigen::VectorXd f = Eigen::VectorXd::Ones(op.size());
  for (int i = 0; i < k; ++i) f = op.apply(f);
  return initial.weights.dot(f);
}

double exact_mean(const ModelSpec& model, const Prefix& initial, int k) {
  return exact_mean(model, point_mass(initial, model.types.size()), k);
}

GrowthEstimate estimate_growth(const ModelSpec& model, const Generation& founders,
                               std::int64_t runs, int k_max, std::int64_t cap,
                               std::uint64_t seed) {
  if (runs <= 0) throw ValidationError("estimate_growth needs at least one run");
  GrowthEstimate est;
  est.runs = runs;
  est.mean_sizes.assign(k_max + 1, 0.0);
  est.contributing.assign(k_max + 1, 0);

  for (std::int64_t rep = 0; rep < runs; ++rep) {
    SplitMix64 stream = SplitMix64::stream(seed, static_cast<std::uint64_t>(rep));
    RunStats rs = simulate(model, founders, k_max, cap, stream());
    if (rs.extinct) ++est.extinct_runs;
    if (rs.truncated) ++est.truncated_runs;
    // A truncated run contributes only up to its truncation point; an
    // extinct run contributes zeros all the way out.
    for (int k = 0; k <= k_max; ++k) {
      std::int64_t size =
          k < static_cast<int>(rs.sizes.size()) ? rs.sizes[k] : (rs.extinct ? 0 : -1);
      if (size < 0) break;  // truncated before k
      est.mean_sizes[k] += static_cast<double>(size);
      est.contributing[k] += 1;
    }
  }

  est.root_rates.assign(k_max + 1, 0.0);
  for (int k = 0; k <= k_max; ++k) {
    if (est.contributing[k] > 0) est.mean_sizes[k] /= est.contributing[k];
    if (k >= 1 && est.mean_sizes[k] > 0)
      est.root_rates[k] = std::pow(est.mean_sizes[k], 1.0 / k);
  }

  // Least-squares slope of log mean size against generation, over the
  // generations with positive mean.
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int m = 0;
  for (int k = 0; k <= k_max; ++k) {
    if (!(est.mean_sizes[k] > 0) || est.contributing[k] == 0) continue;
    double x = k, y = std::log(est.mean_sizes[k]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++m;
  }
  double denom = m * sxx - sx * sx;
  if (m >= 2 && denom > 0) {
    est.log_slope = (m * sxy - sx * sy) / denom;
    est.slope_defined = true;
  }
  return est;
}

}  // namespace atavism
