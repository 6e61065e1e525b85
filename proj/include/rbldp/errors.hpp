#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace rbldp {

/// Argument outside the domain of an operation (validation failure).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Base class for failures of a numerical procedure on valid input.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConvergenceError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Exponent of the variance map exceeded the overflow guard.
class OverflowError : public NumericalError {
 public:
  OverflowError(const std::string& what, long long replica)
      : NumericalError(what), replica_(replica) {}
  long long replica() const noexcept { return replica_; }

 private:
  long long replica_;
};

class FactorizationError : public NumericalError {
 public:
  FactorizationError(const std::string& what, double min_pivot, double max_diag)
      : NumericalError(what), min_pivot_(min_pivot), max_diag_(max_diag) {}
  double min_pivot() const noexcept { return min_pivot_; }
  double max_diag() const noexcept { return max_diag_; }

 private:
  double min_pivot_;
  double max_diag_;
};

/// No multistart reached the constraint tolerance.
class InfeasibleError : public NumericalError {
 public:
  InfeasibleError(const std::string& what, double best_residual,
                  std::vector<double> residual_profile = {})
      : NumericalError(what),
        best_residual_(best_residual),
        residual_profile_(std::move(residual_profile)) {}
  double best_residual() const noexcept { return best_residual_; }
  const std::vector<double>& residual_profile() const noexcept { return residual_profile_; }

 private:
  double best_residual_;
  std::vector<double> residual_profile_;
};

/// Ladder rungs with too few Monte Carlo hits for a log-probability fit.
class InsufficientHitsError : public NumericalError {
 public:
  InsufficientHitsError(const std::string& what, std::vector<double> failing_rungs)
      : NumericalError(what), failing_rungs_(std::move(failing_rungs)) {}
  const std::vector<double>& failing_rungs() const noexcept { return failing_rungs_; }

 private:
  std::vector<double> failing_rungs_;
};

}  // namespace rbldp
