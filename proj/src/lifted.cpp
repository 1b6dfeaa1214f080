#include "atavism/lifted.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace atavism {

namespace {

// n^depth if it stays within limit, else -1.
std::int64_t checked_pow(int n, int depth, std::int64_t limit) {
  std::int64_t v = 1;
  for (int i = 0; i < depth; ++i) {
    if (v > limit / n) return -1;
    v *= n;
  }
  return v;
}

int deepest_affordable(int n, std::int64_t limit) {
  int d = 0;
  std::int64_t v = 1;
  while (v <= limit / n) {
    v *= n;
    ++d;
  }
  return d;
}

}  // namespace

std::int64_t prefix_to_index(const Prefix& p, int num_types) {
  std::int64_t idx = 0;
  for (int t : p) {
    if (t < 0 || t >= num_types)
      throw ValidationError("prefix entry outside the type space");
    idx = idx * num_types + t;
  }
  return idx;
}

Prefix index_to_prefix(std::int64_t index, int num_types, int depth) {
  Prefix p(depth);
  for (int j = depth - 1; j >= 0; --j) {
    p[j] = static_cast<int>(index % num_types);
    index /= num_types;
  }
  return p;
}

LiftedOperator::LiftedOperator(const Eigen::MatrixXd& m, const MemoryLaw& tau,
                               int depth, const LiftOptions& opts)
    : m_(m), tau_(tau), depth_(depth), num_types_(static_cast<int>(m.rows())) {
  if (m.rows() == 0 || m.rows() != m.cols())
    throw ValidationError("lift needs a nonempty square mean matrix");
  if (depth < 1) throw ValidationError("lift depth must be at least 1");

  size_ = checked_pow(num_types_, depth, opts.max_states);
  if (size_ < 0) {
    int reachable = deepest_affordable(num_types_, opts.max_states);
    std::ostringstream os;
    os << "depth " << depth << " needs " << num_types_ << "^" << depth
       << " states, beyond the budget of " << opts.max_states
       << "; deepest affordable depth is " << reachable;
    throw BudgetError(os.str(), reachable);
  }
  stride_ = size_ / num_types_;
  truncated_mass_ = tau.tail(depth);
  tau_prefix_.resize(depth);
  for (int j = 0; j < depth; ++j) tau_prefix_[j] = tau.prob(j);

  // Per-prefix transition weights w_p(t) are reused on every application;
  // cache them when the table fits the same budget as a working vector.
  if (size_ <= opts.max_states / num_types_) {
    cache_.resize(static_cast<std::size_t>(size_) * num_types_);
    std::vector<double> act(num_types_);
    for (std::int64_t ip = 0; ip < size_; ++ip)
      row_weights(ip, cache_.data() + static_cast<std::size_t>(ip) * num_types_,
                  act.data());
  }
}

void LiftedOperator::row_weights(std::int64_t index, double* w, double* act) const {
  const int n = num_types_;
  // Activation mass per type present in the prefix.
  std::fill(act, act + n, 0.0);
  std::int64_t rest = index;
  for (int j = depth_ - 1; j >= 0; --j) {
    act[rest % n] += tau_prefix_[j];
    rest /= n;
  }
  for (int t = 0; t < n; ++t) {
    double acc = 0;
    for (int s = 0; s < n; ++s)
      if (act[s] != 0) acc += act[s] * m_(s, t);
    w[t] = acc;
  }
}

Eigen::VectorXd LiftedOperator::apply(
    const Eigen::Ref<const Eigen::VectorXd>& f) const {
  if (f.size() != size_)
    throw ValidationError("apply: vector length does not match the prefix space");
  const int n = num_types_;
  Eigen::VectorXd out(size_);
  std::vector<double> wbuf(n), act(n);
  for (std::int64_t ip = 0; ip < size_; ++ip) {
    const double* w = cache_.empty()
                          ? (row_weights(ip, wbuf.data(), act.data()),
                             static_cast<const double*>(wbuf.data()))
                          : cache_.data() + static_cast<std::size_t>(ip) * n;
    const std::int64_t base = ip / n;  // drop the oldest coordinate
    double acc = 0;
    for (int t = 0; t < n; ++t) acc += w[t] * f(t * stride_ + base);
    out(ip) = acc;
  }
  return out;
}

Eigen::VectorXd LiftedOperator::apply_adjoint(
    const Eigen::Ref<const Eigen::VectorXd>& g) const {
  if (g.size() != size_)
    throw ValidationError("apply_adjoint: vector length does not match the prefix space");
  const int n = num_types_;
  Eigen::VectorXd out = Eigen::VectorXd::Zero(size_);
  std::vector<double> wbuf(n), act(n);
  for (std::int64_t ip = 0; ip < size_; ++ip) {
    const double gp = g(ip);
    if (gp == 0) continue;
    const double* w = cache_.empty()
                          ? (row_weights(ip, wbuf.data(), act.data()),
                             static_cast<const double*>(wbuf.data()))
                          : cache_.data() + static_cast<std::size_t>(ip) * n;
    const std::int64_t base = ip / n;
    for (int t = 0; t < n; ++t) out(t * stride_ + base) += w[t] * gp;
  }
  return out;
}

double LiftedOperator::max_row_sum() const {
  return apply(Eigen::VectorXd::Ones(size_)).maxCoeff();
}

Eigen::MatrixXd LiftedOperator::dense(std::int64_t max_dense_states) const {
  if (size_ > max_dense_states) {
    std::ostringstream os;
    os << "dense materialization of " << size_ << " states exceeds the cap of "
       << max_dense_states;
    throw BudgetError(os.str(), deepest_affordable(num_types_, max_dense_states));
  }
  const int n = num_types_;
  Eigen::MatrixXd dense = Eigen::MatrixXd::Zero(size_, size_);
  std::vector<double> wbuf(n), act(n);
  for (std::int64_t ip = 0; ip < size_; ++ip) {
    row_weights(ip, wbuf.data(), act.data());
    const std::int64_t base = ip / n;
    for (int t = 0; t < n; ++t) dense(ip, t * stride_ + base) += wbuf[t];
  }
  return dense;
}

RadiusResult radius(const LiftedOperator& op, double tol) {
  double top = op.max_row_sum();
  if (top == 0) {
    // The truncation kept no mass at all (tau places none below the depth);
    // the operator is identically zero and the radius is exactly 0.
    return {0.0, 0.0, 0.0, 0};
  }
  // The lift of a primitive matrix can still be reducible or periodic on
  // parts of the prefix space; a diagonal shift makes the iteration safe and
  // moves the radius by exactly eps.
  const double eps = 1e-3 * top;
  PowerOptions popts;
  popts.tol = tol;
  PowerResult res = certified_power(
      [&op, eps](const Eigen::VectorXd& v) {
        Eigen::VectorXd w = op.apply(v);
        w += eps * v;
        return w;
      },
      op.size(), popts);
  RadiusResult out;
  out.value = std::max(0.0, res.value - eps);
  out.lower = std::max(0.0, res.lower - eps);
  out.upper = std::max(0.0, res.upper - eps);
  out.iterations = res.iterations;
  return out;
}

PrefixDistribution eigen_law(const LiftedOperator& op, double tol) {
  double top = op.max_row_sum();
  if (top == 0)
    throw ConvergenceError("eigen law undefined for the zero operator", 0, 0);
  const double eps = 1e-3 * top;
  PowerOptions popts;
  popts.tol = tol;
  PowerResult res = certified_power(
      [&op, eps](const Eigen::VectorXd& v) {
        Eigen::VectorXd w = op.apply_adjoint(v);
        w += eps * v;
        return w;
      },
      op.size(), popts);
  PrefixDistribution dist;
  dist.depth = op.depth();
  dist.num_types = op.num_types();
  dist.weights = res.vec;  // certified_power returns a unit-mass vector
  return dist;
}

PrefixDistribution project(const PrefixDistribution& dist) {
  if (dist.depth < 2)
    throw ValidationError("cannot project a depth-1 distribution further");
  const int n = dist.num_types;
  PrefixDistribution out;
  out.depth = dist.depth - 1;
  out.num_types = n;
  out.weights = Eigen::VectorXd::Zero(dist.weights.size() / n);
  for (std::int64_t q = 0; q < out.weights.size(); ++q) {
    double acc = 0;
    for (int z = 0; z < n; ++z) acc += dist.weights(q * n + z);
    out.weights(q) = acc;
  }
  return out;
}

PrefixDistribution point_mass(const Prefix& p, int num_types) {
  if (p.empty()) throw ValidationError("point mass needs a nonempty prefix");
  PrefixDistribution dist;
  dist.depth = static_cast<int>(p.size());
  dist.num_types = num_types;
  std::int64_t size = checked_pow(num_types, dist.depth, kDefaultMaxStates);
  if (size < 0) throw BudgetError("point mass prefix is too deep for the budget",
                                  deepest_affordable(num_types, kDefaultMaxStates));
  dist.weights = Eigen::VectorXd::Zero(size);
  dist.weights(prefix_to_index(p, num_types)) = 1.0;
  return dist;
}

RadiusEnclosure converge_radius(const Eigen::MatrixXd& m, const MemoryLaw& tau,
                                const ConvergeOptions& opts) {
  // The Harnack enclosure needs the Perron data of the base matrix; this
  // also front-loads the primitivity requirement.
  PFTriple pf = perron_frobenius(m, opts.inner_tol);
  auto [harnack_lo, harnack_hi] = harnack_enclosure(pf);
  (void)harnack_lo;

  const int n = static_cast<int>(m.rows());
  const int exact_depth = tau.bounded() ? tau.max_support() + 1 : -1;

  LiftOptions lopts;
  lopts.max_states = opts.max_states;

  RadiusEnclosure enc;
  enc.harnack_upper = harnack_hi;

  double prev = 0;
  for (int depth = 1; depth <= opts.max_depth; ++depth) {
    if (checked_pow(n, depth, opts.max_states) < 0) {
      if (enc.trace.empty()) {
        std::ostringstream os;
        os << "even depth 1 exceeds the state budget of " << opts.max_states;
        throw BudgetError(os.str(), 0);
      }
      std::ostringstream os;
      os << "state budget exhausted at depth " << depth
         << " before any stopping rule fired; deepest affordable depth is "
         << (depth - 1);
      throw BudgetError(os.str(), depth - 1);
    }
    LiftedOperator op(m, tau, depth, lopts);
    RadiusResult r = radius(op, opts.inner_tol);
    enc.trace.push_back({depth, r.value, r.lower, r.upper});
    enc.depth = depth;
    enc.lower = std::max(enc.lower, r.lower);
    enc.perturbation_upper = r.value + op.truncated_mass() * m.rowwise().sum().maxCoeff();

    if (exact_depth > 0 && depth >= exact_depth) {
      enc.exact = true;
      enc.converged = true;
      enc.lower = r.lower;
      enc.upper = r.upper;
      return enc;
    }
    if (depth >= 2 && std::abs(r.value - prev) < opts.tol) {
      enc.converged = true;
      break;
    }
    prev = r.value;
  }

  enc.upper = std::min(enc.harnack_upper, enc.perturbation_upper);
  enc.upper = std::max(enc.upper, enc.lower);
  return enc;
}

}  // namespace atavism
