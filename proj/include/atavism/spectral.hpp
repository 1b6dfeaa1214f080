#pragma once

// Perron-Frobenius data for primitive nonnegative matrices: power iteration
// with two-sided Collatz-Wielandt certificates. For a nonnegative matrix A
// and positive vector v, min_i (Av)_i/v_i <= r <= max_i (Av)_i/v_i, and both
// bounds are monotone along the iteration; the bracket width is therefore an
// honest error certificate, not a heuristic residual.

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include "atavism/errors.hpp"

namespace atavism {

struct PowerOptions {
  double tol = 1e-10;             // relative bracket width target
  std::int64_t max_iters = 1000000;
  bool record_trace = false;      // keep per-iteration brackets (for tests)
};

struct PowerResult {
  double value = 0;    // bracket midpoint
  double lower = 0;    // certified lower bound on the radius
  double upper = 0;    // certified upper bound
  Eigen::VectorXd vec; // nonnegative eigenvector approximation, sum 1
  std::int64_t iterations = 0;
  std::vector<std::array<double, 2>> trace;  // (lower, upper) per iteration
};

// Certified power iteration on an abstract nonnegative operator of dimension
// n. Stops when upper - lower <= tol * upper; throws ConvergenceError (with
// the last bracket) if max_iters pass without certification. The operator
// must map positive vectors to positive vectors for the brackets to close;
// callers with possibly reducible or periodic operators add a diagonal shift
// first (the radius shifts by exactly the same amount).
PowerResult certified_power(
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& apply,
    Eigen::Index n, const PowerOptions& opts = {});

// The Perron triple of a primitive matrix: radius r, left eigenvector rho
// (row form, normalized to unit mass), right eigenvector h (normalized so
// rho.dot(h) == 1).
struct PFTriple {
  double r = 0;
  Eigen::VectorXd rho;
  Eigen::VectorXd h;
};

// Computes the triple by running certified iterations on m and its
// transpose and intersecting the two radius brackets. Requires a primitive
// matrix; throws ValidationError otherwise.
PFTriple perron_frobenius(const Eigen::MatrixXd& m, double tol = 1e-10);

// Doob-normalized matrix mbar(s,t) = m(s,t) h(t) / (r h(s)); rows sum to 1.
Eigen::MatrixXd normalized(const Eigen::MatrixXd& m, const PFTriple& pf);

// Harnack-type enclosure [r * min(h)/max(h), r * max(h)/min(h)] that must
// contain the exact radius of every memory-lifted extension of m.
std::pair<double, double> harnack_enclosure(const PFTriple& pf);

}  // namespace atavism
