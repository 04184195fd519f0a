#pragma once

#include <stdexcept>
#include <string>

namespace remest {

/// More than half of the simulated cycles hit the length cap, so the policy
/// (or reference state) effectively never regenerates.
class DegeneratePolicyError : public std::runtime_error {
  public:
    explicit DegeneratePolicyError(const std::string& what) : std::runtime_error(what) {}
};

/// A converged grid policy is not representable as ordered per-state thresholds.
class NonThresholdPolicyError : public std::runtime_error {
  public:
    explicit NonThresholdPolicyError(const std::string& what) : std::runtime_error(what) {}
};

/// Iterative solver failed to reach its tolerance within the iteration budget.
class ConvergenceError : public std::runtime_error {
  public:
    explicit ConvergenceError(const std::string& what) : std::runtime_error(what) {}
};

/// Problem dimensions exceed an enumeration budget (exact solvers only).
class BudgetError : public std::runtime_error {
  public:
    explicit BudgetError(const std::string& what) : std::runtime_error(what) {}
};

/// Malformed or inconsistent experiment configuration.
class ConfigError : public std::runtime_error {
  public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace remest
