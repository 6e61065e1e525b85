#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "rbldp/covariance.hpp"

namespace rbldp {

/// Monte Carlo estimate of P(t^beta X_t >= u).
struct TailEstimate {
  double p_hat = 0.0;
  double std_err = 0.0;  // sqrt(p(1-p)/n_paths)
  int n_paths = 0;
  long long hits = 0;
  double u = 0.0;
  double t = 0.0;
  bool zero_hits = false;
  double upper_bound = 0.0;  // 95% one-sided bound (3/n_paths) when zero_hits
};

struct McOptions {
  int n = 64;  // grid steps
  int n_paths = 10000;
  std::uint64_t seed = 0;
  int threads = 1;
};

/// Simulates the unscaled model on [0, t] (grid restricted to [0, t]) and
/// counts {t^beta X_t >= u}. Requires t in (0, 1] and n_paths >= 10^4.
TailEstimate mc_tail(double u, double t, const ModelParams& params, const McOptions& opts);

/// Rate function value at evaluation point eps.
using RateHook = std::function<double(double eps)>;

/// Hook backed by solve_endpoint in correlated mode (uncorrelated when rho == 0).
RateHook endpoint_rate_hook(const ModelParams& params, double u, int rate_grid_n = 64);

struct SlopeReport {
  double u = 0.0;
  std::vector<double> ladder;
  std::vector<double> p_hat;
  std::vector<double> std_err;
  std::vector<long long> hits;
  std::vector<double> log_p;
  std::vector<double> rate_per_rung;
  double fitted_slope = 0.0;
  double slope_std_err = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  double rate_reference = 0.0;
  double relative_gap = 0.0;  // NaN when the reference is zero
  bool log_p_monotone = false;
};

struct SlopeOptions {
  McOptions mc;
  int min_hits = 50;
  /// Evaluate the hook once at this eps instead of at every rung (eps = t).
  std::optional<double> fixed_eps;
};

/// Regresses log p_hat against -t^(-beta) over a strictly decreasing ladder of t.
/// Throws InsufficientHitsError listing rungs with fewer than min_hits hits.
SlopeReport slope_check(double u, std::span<const double> ladder, const ModelParams& params,
                        const SlopeOptions& opts, const RateHook& rate_hook);

struct ExpEquivReport {
  double delta = 0.0;
  int n_paths = 0;
  std::vector<double> eps;
  std::vector<double> q_hat;
  std::vector<double> std_err;
  std::vector<double> scaled_log_q;  // eps^beta log q_hat, -inf when q_hat = 0
  bool nonincreasing = false;
  bool final_zero = false;
  bool pass = false;
};

/// Frequency of sup_t |X^eps_t - int_0^t sqrt(v^eps) dB^eps| > delta; the gap is
/// the running drift 1/2 int v^eps, so its sup is attained at t = 1.
/// Every rung reuses the same driving paths.
ExpEquivReport exp_equiv_check(double delta, std::span<const double> eps_ladder,
                               const ModelParams& params, const McOptions& opts);

struct BorellReport {
  double m_hat = 0.0;  // sample mean of sup_k Z_{t_k}
  double m_std_err = 0.0;
  double sigma2 = 0.0;  // sup_t Var(Z_t) = eta^2
  std::vector<double> x;
  std::vector<double> p_hat;
  std::vector<double> std_err;
  std::vector<double> bound;
  std::vector<bool> holds;
  bool pass = false;
};

/// Checks P(sup Z > x) <= exp(-(x - m)^2 / (2 sigma^2)) + se_multiple * SE.
/// With `offsets_from_mean` the x values are read as offsets above m_hat.
BorellReport borell_tis_check(std::span<const double> x_values, const ModelParams& params,
                              const McOptions& opts, bool offsets_from_mean = false,
                              double se_multiple = 3.0);

struct HolderReport {
  double target = 0.0;  // alpha + 1/2
  double mean = 0.0;
  double std_err = 0.0;
  double tolerance = 0.05;
  bool pass = false;
};

HolderReport holder_check(const ModelParams& params, const McOptions& opts,
                          double tolerance = 0.05);

struct SelfSimReport {
  std::vector<double> a;
  std::vector<double> sample_variance;
  std::vector<double> theory_variance;  // a^(2 alpha + 1) eta^2
  std::vector<double> ks_statistic;
  std::vector<double> p_value;
  double level = 0.01;
  bool pass = false;
};

/// KS test of the simulated marginal Z_a against N(0, a^(2 alpha + 1) eta^2).
/// Each a must be a grid node of the [0, 1] grid with opts.n steps.
SelfSimReport selfsim_check(std::span<const double> a_values, const ModelParams& params,
                            const McOptions& opts, double level = 0.01);

}  // namespace rbldp
