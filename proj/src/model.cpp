#include "atavism/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

namespace atavism {

namespace {

constexpr double kMassTol = 1e-12;

bool finite_nonneg(double x) { return std::isfinite(x) && x >= 0; }

}  // namespace

// ---------------------------------------------------------------- TypeSpace

TypeSpace::TypeSpace(std::vector<std::string> labels) : labels_(std::move(labels)) {
  if (labels_.empty()) throw ValidationError("type space must be nonempty");
  std::set<std::string> seen;
  for (const auto& l : labels_) {
    if (l.empty()) throw ValidationError("type labels must be nonempty");
    if (!seen.insert(l).second)
      throw ValidationError("duplicate type label: " + l);
  }
}

int TypeSpace::index(const std::string& label) const {
  for (int i = 0; i < size(); ++i)
    if (labels_[i] == label) return i;
  throw ValidationError("unknown type label: " + label);
}

// ---------------------------------------------------------------- MemoryLaw

MemoryLaw MemoryLaw::finite(std::vector<double> probs) {
  if (probs.empty()) throw ValidationError("memory law needs at least one atom");
  double total = 0;
  for (double p : probs) {
    if (!finite_nonneg(p))
      throw ValidationError("memory law probabilities must be finite and nonnegative");
    total += p;
  }
  if (std::abs(total - 1.0) > kMassTol)
    throw ValidationError("memory law probabilities must sum to 1");

  MemoryLaw law;
  law.kind_ = Kind::kFinite;
  law.probs_ = std::move(probs);
  // Backward partial sums give the tails; clamp to keep the nonincreasing
  // invariant exact despite rounding in the forward sum.
  const int n = static_cast<int>(law.probs_.size());
  law.tails_.assign(n + 1, 0.0);
  for (int k = n - 1; k >= 0; --k)
    law.tails_[k] = law.tails_[k + 1] + law.probs_[k];
  law.tails_[0] = 1.0;
  for (int k = 1; k <= n; ++k)
    law.tails_[k] = std::min(law.tails_[k], law.tails_[k - 1]);
  law.alias_ = AliasTable(law.probs_);
  return law;
}

MemoryLaw MemoryLaw::geometric(double p) {
  if (!(p > 0) || !(p <= 1) || !std::isfinite(p))
    throw ValidationError("geometric memory law needs p in (0,1]");
  MemoryLaw law;
  law.kind_ = Kind::kGeometric;
  law.geo_p_ = p;
  return law;
}

double MemoryLaw::prob(std::int64_t j) const {
  if (j < 0) return 0;
  if (kind_ == Kind::kFinite)
    return j < static_cast<std::int64_t>(probs_.size()) ? probs_[j] : 0.0;
  return geo_p_ * std::pow(1.0 - geo_p_, static_cast<double>(j));
}

double MemoryLaw::tail(std::int64_t k) const {
  if (k <= 0) return 1.0;
  if (kind_ == Kind::kFinite)
    return k < static_cast<std::int64_t>(tails_.size()) ? tails_[k] : 0.0;
  return std::pow(1.0 - geo_p_, static_cast<double>(k));
}

double MemoryLaw::mean() const {
  if (kind_ == Kind::kFinite) {
    double m = 0;
    for (std::size_t j = 0; j < probs_.size(); ++j) m += j * probs_[j];
    return m;
  }
  return (1.0 - geo_p_) / geo_p_;
}

int MemoryLaw::max_support() const {
  if (kind_ != Kind::kFinite)
    throw ValidationError("max_support is defined only for bounded memory laws");
  for (int j = static_cast<int>(probs_.size()) - 1; j >= 0; --j)
    if (probs_[j] > 0) return j;
  return 0;  // unreachable: unit mass guarantees a positive atom
}

double MemoryLaw::geometric_p() const {
  if (kind_ != Kind::kGeometric)
    throw ValidationError("geometric_p is defined only for geometric memory laws");
  return geo_p_;
}

std::int64_t MemoryLaw::sample(SplitMix64& rng) const {
  if (kind_ == Kind::kFinite) return alias_.sample(rng);
  return sample_geometric(geo_p_, rng);
}

double memory_distance(const Prefix& p, const Prefix& q, const MemoryLaw& tau) {
  if (p.size() != q.size())
    throw ValidationError("memory_distance requires equal-length words");
  for (std::size_t j = 0; j < p.size(); ++j)
    if (p[j] != q[j]) return tau.tail(static_cast<std::int64_t>(j));
  return 0.0;  // identical words: the distance is the vanishing tail limit
}

// ----------------------------------------------------------- OffspringKernel

OffspringKernel OffspringKernel::poisson(Eigen::MatrixXd means) {
  if (means.rows() == 0 || means.rows() != means.cols())
    throw ValidationError("poisson kernel needs a square rate matrix");
  for (Eigen::Index i = 0; i < means.rows(); ++i)
    for (Eigen::Index j = 0; j < means.cols(); ++j)
      if (!finite_nonneg(means(i, j)))
        throw ValidationError("poisson rates must be finite and nonnegative");
  OffspringKernel k;
  k.family_ = Family::kPoisson;
  k.param_ = std::move(means);
  return k;
}

OffspringKernel OffspringKernel::deterministic(Eigen::MatrixXd counts) {
  if (counts.rows() == 0 || counts.rows() != counts.cols())
    throw ValidationError("deterministic kernel needs a square count matrix");
  for (Eigen::Index i = 0; i < counts.rows(); ++i)
    for (Eigen::Index j = 0; j < counts.cols(); ++j) {
      double c = counts(i, j);
      if (!finite_nonneg(c) || c != std::floor(c))
        throw ValidationError("deterministic kernel counts must be nonnegative integers");
    }
  OffspringKernel k;
  k.family_ = Family::kDeterministic;
  k.param_ = std::move(counts);
  return k;
}

OffspringKernel OffspringKernel::finite(std::vector<std::vector<KernelAtom>> atoms) {
  if (atoms.empty()) throw ValidationError("finite kernel needs atoms for every type");
  const int n = static_cast<int>(atoms.size());
  for (const auto& row : atoms) {
    if (row.empty()) throw ValidationError("finite kernel has a type with no atoms");
    double total = 0;
    for (const auto& atom : row) {
      if (atom.counts.size() != n)
        throw ValidationError("finite kernel atom count vector has wrong length");
      if ((atom.counts.array() < 0).any())
        throw ValidationError("finite kernel counts must be nonnegative");
      if (!finite_nonneg(atom.prob))
        throw ValidationError("finite kernel probabilities must be finite and nonnegative");
      total += atom.prob;
    }
    if (std::abs(total - 1.0) > kMassTol)
      throw ValidationError("finite kernel atom probabilities must sum to 1");
  }
  OffspringKernel k;
  k.family_ = Family::kFinite;
  k.atoms_ = std::move(atoms);
  return k;
}

int OffspringKernel::num_types() const {
  return family_ == Family::kFinite ? static_cast<int>(atoms_.size())
                                    : static_cast<int>(param_.rows());
}

Eigen::MatrixXd mean_from_kernel(const OffspringKernel& kernel) {
  if (kernel.family() != OffspringKernel::Family::kFinite)
    return kernel.parameter();
  const int n = kernel.num_types();
  Eigen::MatrixXd mean = Eigen::MatrixXd::Zero(n, n);
  for (int s = 0; s < n; ++s)
    for (const auto& atom : kernel.atoms()[s])
      mean.row(s) += atom.prob * atom.counts.cast<double>().transpose();
  return mean;
}

// --------------------------------------------------------- InitialMemoryRule

InitialMemoryRule InitialMemoryRule::constant(int type) {
  if (type < 0) throw ValidationError("constant memory rule needs a valid type");
  InitialMemoryRule r;
  r.kind_ = Kind::kConstant;
  r.word_ = {type};
  return r;
}

InitialMemoryRule InitialMemoryRule::periodic(std::vector<int> word) {
  if (word.empty()) throw ValidationError("periodic memory rule needs a nonempty word");
  for (int t : word)
    if (t < 0) throw ValidationError("periodic memory rule has a negative type");
  InitialMemoryRule r;
  r.kind_ = Kind::kPeriodic;
  r.word_ = std::move(word);
  return r;
}

InitialMemoryRule InitialMemoryRule::iid(std::vector<double> probs, std::uint64_t seed) {
  if (probs.empty()) throw ValidationError("iid memory rule needs probabilities");
  double total = 0;
  for (double p : probs) {
    if (!finite_nonneg(p))
      throw ValidationError("iid memory rule probabilities must be finite and nonnegative");
    total += p;
  }
  if (std::abs(total - 1.0) > kMassTol)
    throw ValidationError("iid memory rule probabilities must sum to 1");
  InitialMemoryRule r;
  r.kind_ = Kind::kIid;
  r.seed_ = seed;
  r.cdf_.resize(probs.size());
  double acc = 0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    acc += probs[i];
    r.cdf_[i] = acc;
  }
  r.cdf_.back() = 1.0;
  return r;
}

int InitialMemoryRule::type_at(std::int64_t j) const {
  switch (kind_) {
    case Kind::kConstant:
      return word_[0];
    case Kind::kPeriodic:
      return word_[static_cast<std::size_t>(j % static_cast<std::int64_t>(word_.size()))];
    case Kind::kIid: {
      // Pure hash of (seed, position): position j always yields the same
      // type, no matter in what order positions are queried.
      SplitMix64 h(seed_ ^ (0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(j + 1)));
      double u = h.uniform();
      for (std::size_t i = 0; i + 1 < cdf_.size(); ++i)
        if (u < cdf_[i]) return static_cast<int>(i);
      return static_cast<int>(cdf_.size()) - 1;
    }
  }
  return 0;  // unreachable
}

int InitialMemoryRule::max_type() const {
  if (kind_ == Kind::kIid) return static_cast<int>(cdf_.size()) - 1;
  return *std::max_element(word_.begin(), word_.end());
}

// ------------------------------------------------------------- model checks

bool is_primitive(const Eigen::MatrixXd& m) {
  const Eigen::Index n = m.rows();
  if (n == 0 || m.cols() != n) return false;
  using BoolMat = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>;
  BoolMat pat(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) pat(i, j) = m(i, j) > 0;

  auto bool_mul = [n](const BoolMat& a, const BoolMat& b) {
    BoolMat c = BoolMat::Constant(n, n, false);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index k = 0; k < n; ++k)
        if (a(i, k))
          for (Eigen::Index j = 0; j < n; ++j)
            if (b(k, j)) c(i, j) = true;
    return c;
  };

  // Wielandt bound: primitive iff pattern^((n-1)^2 + 1) is all-positive.
  // Repeated squaring reaches any power >= that exponent; overshooting is
  // harmless because powers of a primitive pattern stay all-positive.
  std::int64_t target = (n - 1) * (n - 1) + 1;
  BoolMat acc = pat;
  std::int64_t power = 1;
  while (power < target) {
    acc = bool_mul(acc, acc);
    power *= 2;
    if (acc.all()) return true;
  }
  return acc.all();
}

OffspringKernel effective_kernel(const ModelSpec& model) {
  return model.kernel ? *model.kernel : OffspringKernel::poisson(model.mean);
}

std::string ValidationReport::summary() const {
  std::ostringstream os;
  for (std::size_t i = 0; i < failures.size(); ++i) {
    if (i) os << "; ";
    os << failures[i];
  }
  return os.str();
}

ValidationReport validate(const ModelSpec& model) {
  ValidationReport report;
  const int n = model.types.size();

  if (model.mean.rows() != n || model.mean.cols() != n)
    report.failures.push_back("mean matrix shape does not match the type space");
  bool entries_ok = true;
  for (Eigen::Index i = 0; i < model.mean.rows(); ++i)
    for (Eigen::Index j = 0; j < model.mean.cols(); ++j)
      if (!finite_nonneg(model.mean(i, j))) entries_ok = false;
  if (!entries_ok)
    report.failures.push_back("mean matrix entries must be finite and nonnegative");

  if (entries_ok && model.mean.rows() == n && model.mean.cols() == n &&
      !is_primitive(model.mean))
    report.failures.push_back("mean matrix must be primitive");

  if (!(model.tau.prob(0) > 0))
    report.failures.push_back("memory law must place positive mass on depth 0");

  if (model.kernel) {
    if (model.kernel->num_types() != n) {
      report.failures.push_back("offspring kernel type count does not match the type space");
    } else {
      Eigen::MatrixXd km = mean_from_kernel(*model.kernel);
      double scale = std::max(1.0, model.mean.cwiseAbs().maxCoeff());
      if (((km - model.mean).cwiseAbs().maxCoeff()) > 1e-9 * scale)
        report.failures.push_back("offspring kernel mean does not match the declared mean matrix");
    }
  }

  if (model.initial_memory.max_type() >= n)
    report.failures.push_back("initial memory rule emits a type outside the type space");

  return report;
}

void require_valid(const ModelSpec& model) {
  ValidationReport r = validate(model);
  if (!r.ok()) throw ValidationError(r.summary());
}

}  // namespace atavism
