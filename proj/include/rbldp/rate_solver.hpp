#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "rbldp/covariance.hpp"
#include "rbldp/grid.hpp"
#include "rbldp/operators.hpp"

namespace rbldp {

enum class RateMode { correlated, uncorrelated };

/// A discretized rate-function evaluation.
///
/// `target_u` is used by the endpoint solvers, `target_path` (grid.size()
/// values starting at 0) by solve_path. `eps` is the point at which the
/// variance map m(., eps) is evaluated inside the constraint.
struct RateProblem {
  ModelParams params;
  Grid grid{64};
  double eps = 1.0;
  RateMode mode = RateMode::correlated;
  double target_u = 0.0;
  std::vector<double> target_path;

  void validate() const;
};

struct SolverSettings {
  int max_outer = 8;
  double penalty0 = 10.0;        // initial penalty, relative to the linearized constraint scale
  double penalty_growth = 10.0;
  int starts = 8;
  std::uint64_t seed = 0;
  double tolerance = 1e-8;       // residual target, times max(1, |u|)
  int max_inner_iterations = 5000;
};

struct RateResult {
  double value = 0.0;
  Control control;   // f (correlated) or f1 (uncorrelated)
  Control control2;  // f2 in the uncorrelated case, empty otherwise
  double residual = 0.0;
  std::vector<double> residual_profile;  // per-node residuals for path targets
  int iterations = 0;
  int multistart_best_of = 0;
  int best_start = -1;
  bool converged = false;
};

/// G(f) = sum_k sqrt(m(I^K f)(t_k, eps)) rho f_k dt, the endpoint of the
/// integral of sqrt(m(I^K f)) against I^rho f.
double endpoint_map_correlated(std::span<const double> f, const RateProblem& problem);

/// Adjoint gradient of endpoint_map_correlated.
std::vector<double> gradient_endpoint(std::span<const double> f, const RateProblem& problem);

/// Endpoint rate: inf 1/2 ||f||^2 subject to the endpoint reaching target_u.
/// Correlated mode constrains G(f); uncorrelated mode solves the two-control
/// problem over (f1, f2). Throws InfeasibleError if no start converges.
RateResult solve_endpoint(const RateProblem& problem, const SolverSettings& settings = {});

/// Uncorrelated endpoint rate via the closed-form inner minimization over f2:
/// inf_{f1} 1/2 ||f1||^2 + u^2 / (2 V(f1)), V(f1) = sum_k m(I^K f1)(t_k, eps) dt.
RateResult solve_endpoint_uncorrelated_reduced(const RateProblem& problem,
                                               const SolverSettings& settings = {});

/// Path rate: the running integral must match target_path at every node.
RateResult solve_path(const RateProblem& problem, const SolverSettings& settings = {});

/// Running integral (length n + 1) of sqrt(m(I^K f1)) against I^rho f (correlated,
/// f2 ignored) or against int f2 (uncorrelated).
std::vector<double> forward_path(std::span<const double> f1, std::span<const double> f2,
                                 const RateProblem& problem);

}  // namespace rbldp
