#include "atavism/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "atavism/model.hpp"

namespace atavism {

PowerResult certified_power(
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& apply,
    Eigen::Index n, const PowerOptions& opts) {
  if (n <= 0) throw ValidationError("power iteration needs dimension >= 1");

  Eigen::VectorXd v = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
  // Running intersection of the per-iteration brackets. Mathematically the
  // raw brackets are already nested; intersecting guards against the last
  // few bits of floating-point noise.
  double best_lo = 0;
  double best_hi = std::numeric_limits<double>::infinity();
  PowerResult res;

  for (std::int64_t it = 1; it <= opts.max_iters; ++it) {
    Eigen::VectorXd w = apply(v);
    double lo = std::numeric_limits<double>::infinity();
    double hi = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (!(v(i) > 0) || !std::isfinite(w(i)) || w(i) < 0)
        throw ConvergenceError(
            "power iteration left the positive cone; operator is not "
            "positivity-improving",
            best_lo, std::isfinite(best_hi) ? best_hi : 0);
      double ratio = w(i) / v(i);
      lo = std::min(lo, ratio);
      hi = std::max(hi, ratio);
    }
    if (opts.record_trace) res.trace.push_back({lo, hi});
    best_lo = std::max(best_lo, lo);
    best_hi = std::min(best_hi, hi);
    res.iterations = it;

    double mass = w.sum();
    if (!(mass > 0))
      throw ConvergenceError("power iteration reached the zero vector", best_lo,
                             std::isfinite(best_hi) ? best_hi : 0);
    v = w / mass;

    if (best_hi - best_lo <= opts.tol * best_hi) {
      res.lower = best_lo;
      res.upper = best_hi;
      res.value = 0.5 * (best_lo + best_hi);
      res.vec = v;
      return res;
    }
  }
  throw ConvergenceError("power iteration did not certify the target tolerance",
                         best_lo, std::isfinite(best_hi) ? best_hi : 0);
}

PFTriple perron_frobenius(const Eigen::MatrixXd& m, double tol) {
  if (m.rows() == 0 || m.rows() != m.cols())
    throw ValidationError("perron_frobenius needs a nonempty square matrix");
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      if (!std::isfinite(m(i, j)) || m(i, j) < 0)
        throw ValidationError("matrix entries must be finite and nonnegative");
  if (!is_primitive(m))
    throw ValidationError("matrix is not primitive");

  PowerOptions opts;
  opts.tol = tol;

  PowerResult right = certified_power(
      [&m](const Eigen::VectorXd& v) { return Eigen::VectorXd(m * v); },
      m.rows(), opts);
  PowerResult left = certified_power(
      [&m](const Eigen::VectorXd& v) {
        return Eigen::VectorXd(m.transpose() * v);
      },
      m.rows(), opts);

  // Both runs bracket the same radius; intersect for the tightest estimate.
  double lo = std::max(right.lower, left.lower);
  double hi = std::min(right.upper, left.upper);
  if (lo > hi) {  // disjoint only through rounding; fall back to the union
    lo = std::min(right.lower, left.lower);
    hi = std::max(right.upper, left.upper);
  }

  PFTriple pf;
  pf.r = 0.5 * (lo + hi);
  pf.rho = left.vec / left.vec.sum();
  double inner = pf.rho.dot(right.vec);
  pf.h = right.vec / inner;
  return pf;
}

Eigen::MatrixXd normalized(const Eigen::MatrixXd& m, const PFTriple& pf) {
  const Eigen::Index n = m.rows();
  Eigen::MatrixXd mbar(n, n);
  for (Eigen::Index s = 0; s < n; ++s)
    for (Eigen::Index t = 0; t < n; ++t)
      mbar(s, t) = m(s, t) * pf.h(t) / (pf.r * pf.h(s));
  return mbar;
}

std::pair<double, double> harnack_enclosure(const PFTriple& pf) {
  double hmin = pf.h.minCoeff();
  double hmax = pf.h.maxCoeff();
  return {pf.r * hmin / hmax, pf.r * hmax / hmin};
}

}  // namespace atavism
