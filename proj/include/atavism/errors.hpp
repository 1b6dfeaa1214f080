#pragma once

#include <stdexcept>
#include <string>

namespace atavism {

// Error categories; the CLI maps each to a distinct exit code.

// Malformed input that never made it to a model (bad JSON, wrong shapes).
struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A structurally well-formed model that violates a semantic requirement.
struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A request whose state space would exceed the configured memory budget.
struct BudgetError : std::runtime_error {
  BudgetError(const std::string& what, int reachable)
      : std::runtime_error(what), reachable_depth(reachable) {}
  // Largest depth that would still fit the budget (0 if none).
  int reachable_depth;
};

// Filesystem failures when reading models or writing outputs.
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// An iteration that failed to certify its target tolerance. Carries the
// last certified bracket so the caller still learns what was established.
struct ConvergenceError : std::runtime_error {
  ConvergenceError(const std::string& what, double lo, double hi)
      : std::runtime_error(what), lower(lo), upper(hi) {}
  double lower;
  double upper;
};

}  // namespace atavism
