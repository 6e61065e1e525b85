#include "rbldp/ldp_verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "rbldp/errors.hpp"
#include "rbldp/parallel.hpp"
#include "rbldp/path_sim.hpp"
#include "rbldp/rate_solver.hpp"
#include "rbldp/rbergomi.hpp"
#include "rbldp/stats.hpp"

namespace rbldp {

namespace {

std::uint64_t rung_seed(std::uint64_t seed, std::size_t rung) {
  return seed + 0x9E3779B97F4A7C15ull * (rung + 1);
}

void check_ladder(std::span<const double> ladder, const char* what) {
  if (ladder.size() < 2) throw DomainError(std::string(what) + ": ladder needs at least two rungs");
  for (std::size_t i = 0; i < ladder.size(); ++i) {
    if (!(ladder[i] > 0.0 && ladder[i] <= 1.0))
      throw DomainError(std::string(what) + ": ladder values must lie in (0, 1]");
    if (i > 0 && !(ladder[i] < ladder[i - 1]))
      throw DomainError(std::string(what) + ": ladder must be strictly decreasing");
  }
}

}  // namespace

TailEstimate mc_tail(double u, double t, const ModelParams& params, const McOptions& opts) {
  params.validate();
  if (!(t > 0.0 && t <= 1.0)) throw DomainError("mc_tail: t must lie in (0, 1]");
  if (opts.n_paths < 10000) throw DomainError("mc_tail: needs at least 10^4 paths");
  const Grid grid(opts.n, t);
  const auto factor = build_joint_cholesky(grid, params);
  const double scale = std::pow(t, params.beta());

  std::vector<unsigned char> hit(opts.n_paths, 0);
  parallel_for(hit.size(), opts.threads, [&](std::size_t r) {
    const auto bundle = sample_path(factor, opts.seed, r);
    const auto v = vol_from_z(bundle.z, grid, params, 1.0, static_cast<long long>(r));
    const auto x = logprice_path(v, bundle.b, grid);
    hit[r] = scale * x[grid.n] >= u ? 1 : 0;
  });

  TailEstimate est;
  est.u = u;
  est.t = t;
  est.n_paths = opts.n_paths;
  for (auto h : hit) est.hits += h;
  est.p_hat = static_cast<double>(est.hits) / opts.n_paths;
  est.std_err = std::sqrt(est.p_hat * (1.0 - est.p_hat) / opts.n_paths);
  est.zero_hits = est.hits == 0;
  est.upper_bound = est.zero_hits ? 3.0 / opts.n_paths : est.p_hat;
  return est;
}

RateHook endpoint_rate_hook(const ModelParams& params, double u, int rate_grid_n) {
  return [params, u, rate_grid_n](double eps) {
    RateProblem problem;
    problem.params = params;
    problem.grid = Grid(rate_grid_n);
    problem.eps = eps;
    problem.target_u = u;
    if (params.rho == 0.0) {
      problem.mode = RateMode::uncorrelated;
      return solve_endpoint_uncorrelated_reduced(problem).value;
    }
    problem.mode = RateMode::correlated;
    return solve_endpoint(problem).value;
  };
}

SlopeReport slope_check(double u, std::span<const double> ladder, const ModelParams& params,
                        const SlopeOptions& opts, const RateHook& rate_hook) {
  check_ladder(ladder, "slope_check");
  const double beta = params.beta();
  SlopeReport rep;
  rep.u = u;
  rep.ladder.assign(ladder.begin(), ladder.end());

  std::vector<double> failing;
  for (std::size_t i = 0; i < ladder.size(); ++i) {
    McOptions mc = opts.mc;
    mc.seed = rung_seed(opts.mc.seed, i);
    const auto est = mc_tail(u, ladder[i], params, mc);
    rep.p_hat.push_back(est.p_hat);
    rep.std_err.push_back(est.std_err);
    rep.hits.push_back(est.hits);
    if (est.hits < opts.min_hits) failing.push_back(ladder[i]);
  }
  if (!failing.empty()) {
    std::string list;
    for (double t : failing) list += (list.empty() ? "" : ", ") + std::to_string(t);
    throw InsufficientHitsError("slope_check: fewer than " + std::to_string(opts.min_hits) +
                                    " hits at t = " + list,
                                failing);
  }

  std::vector<double> reg(ladder.size());
  for (std::size_t i = 0; i < ladder.size(); ++i) {
    rep.log_p.push_back(std::log(rep.p_hat[i]));
    reg[i] = -std::pow(ladder[i], -beta);
  }
  const auto fit = ols(reg, rep.log_p);
  rep.fitted_slope = fit.slope;
  rep.intercept = fit.intercept;
  rep.r_squared = fit.r_squared;

  // slope = sum c_i log p_i; Var(log p_i) ~ (1 - p)/(p N) by the delta method
  double mean_reg = 0.0, sxx = 0.0, var = 0.0;
  for (double x : reg) mean_reg += x;
  mean_reg /= static_cast<double>(reg.size());
  for (double x : reg) sxx += (x - mean_reg) * (x - mean_reg);
  for (std::size_t i = 0; i < reg.size(); ++i) {
    const double c = (reg[i] - mean_reg) / sxx;
    const double p = rep.p_hat[i];
    var += c * c * (1.0 - p) / (p * opts.mc.n_paths);
  }
  rep.slope_std_err = std::sqrt(var);

  rep.log_p_monotone = true;
  for (std::size_t i = 1; i < rep.log_p.size(); ++i)
    if (!(rep.log_p[i] < rep.log_p[i - 1])) rep.log_p_monotone = false;

  if (u == 0.0) {
    rep.rate_reference = 0.0;
    rep.rate_per_rung.assign(ladder.size(), 0.0);
  } else if (opts.fixed_eps) {
    rep.rate_reference = rate_hook(*opts.fixed_eps);
    rep.rate_per_rung.assign(ladder.size(), rep.rate_reference);
  } else {
    double sum = 0.0;
    for (double t : ladder) {
      rep.rate_per_rung.push_back(rate_hook(t));
      sum += rep.rate_per_rung.back();
    }
    rep.rate_reference = sum / static_cast<double>(ladder.size());
  }
  rep.relative_gap = rep.rate_reference > 0.0
                         ? std::abs(rep.fitted_slope - rep.rate_reference) / rep.rate_reference
                         : std::numeric_limits<double>::quiet_NaN();
  return rep;
}

ExpEquivReport exp_equiv_check(double delta, std::span<const double> eps_ladder,
                               const ModelParams& params, const McOptions& opts) {
  params.validate();
  if (!(delta >= 0.0)) throw DomainError("exp_equiv_check: delta must be non-negative");
  check_ladder(eps_ladder, "exp_equiv_check");
  if (opts.n_paths < 1) throw DomainError("exp_equiv_check: n_paths must be positive");
  const Grid grid(opts.n);
  const auto factor = build_z_cholesky(grid, params);
  const std::size_t rungs = eps_ladder.size();

  std::vector<unsigned char> exceed(rungs * opts.n_paths, 0);
  parallel_for(static_cast<std::size_t>(opts.n_paths), opts.threads, [&](std::size_t r) {
    const auto z = sample_z_path(factor, opts.seed, r);
    for (std::size_t i = 0; i < rungs; ++i) {
      const auto v = vol_from_z(z, grid, params, eps_ladder[i], static_cast<long long>(r));
      double drift = 0.0;
      for (int k = 0; k < grid.n; ++k) drift += v[k];
      drift *= 0.5 * grid.dt();
      exceed[i * opts.n_paths + r] = drift > delta ? 1 : 0;
    }
  });

  ExpEquivReport rep;
  rep.delta = delta;
  rep.n_paths = opts.n_paths;
  rep.eps.assign(eps_ladder.begin(), eps_ladder.end());
  for (std::size_t i = 0; i < rungs; ++i) {
    long long hits = 0;
    for (int r = 0; r < opts.n_paths; ++r) hits += exceed[i * opts.n_paths + r];
    const double q = static_cast<double>(hits) / opts.n_paths;
    rep.q_hat.push_back(q);
    rep.std_err.push_back(std::sqrt(q * (1.0 - q) / opts.n_paths));
    rep.scaled_log_q.push_back(q > 0.0 ? std::pow(eps_ladder[i], params.beta()) * std::log(q)
                                       : -std::numeric_limits<double>::infinity());
  }
  rep.nonincreasing = true;
  for (std::size_t i = 1; i < rungs; ++i)
    if (rep.q_hat[i] > rep.q_hat[i - 1]) rep.nonincreasing = false;
  rep.final_zero = rep.q_hat.back() == 0.0;
  rep.pass = rep.nonincreasing && rep.final_zero && opts.n_paths >= 100000;
  return rep;
}

BorellReport borell_tis_check(std::span<const double> x_values, const ModelParams& params,
                              const McOptions& opts, bool offsets_from_mean, double se_multiple) {
  params.validate();
  if (opts.n_paths < 2) throw DomainError("borell_tis_check: needs at least two paths");
  const Grid grid(opts.n);
  const auto factor = build_z_cholesky(grid, params);
  std::vector<double> sup(opts.n_paths);
  parallel_for(sup.size(), opts.threads, [&](std::size_t r) {
    const auto z = sample_z_path(factor, opts.seed, r);
    sup[r] = *std::max_element(z.begin(), z.end());
  });

  BorellReport rep;
  const auto ms = mean_se(sup);
  rep.m_hat = ms.mean;
  rep.m_std_err = ms.std_err;
  rep.sigma2 = params.eta * params.eta;
  rep.pass = true;
  for (double xv : x_values) {
    const double x = offsets_from_mean ? rep.m_hat + xv : xv;
    long long hits = 0;
    for (double s : sup) hits += s > x ? 1 : 0;
    const double p = static_cast<double>(hits) / opts.n_paths;
    const double se = std::sqrt(p * (1.0 - p) / opts.n_paths);
    const double bound =
        x > rep.m_hat ? std::min(1.0, std::exp(-(x - rep.m_hat) * (x - rep.m_hat) / (2.0 * rep.sigma2)))
                      : 1.0;
    const bool holds = p <= bound + se_multiple * se;
    rep.x.push_back(x);
    rep.p_hat.push_back(p);
    rep.std_err.push_back(se);
    rep.bound.push_back(bound);
    rep.holds.push_back(holds);
    rep.pass = rep.pass && holds;
  }
  return rep;
}

HolderReport holder_check(const ModelParams& params, const McOptions& opts, double tolerance) {
  params.validate();
  if (opts.n_paths < 2) throw DomainError("holder_check: needs at least two paths");
  const Grid grid(opts.n);
  if (grid.n < 256) throw DomainError("holder_check: needs n >= 256");
  const auto factor = build_z_cholesky(grid, params);
  std::vector<double> est(opts.n_paths);
  parallel_for(est.size(), opts.threads, [&](std::size_t r) {
    const auto z = sample_z_path(factor, opts.seed, r);
    auto logv = vol_from_z(z, grid, params, 1.0, static_cast<long long>(r));
    for (auto& x : logv) x = std::log(x);
    est[r] = holder_estimate(logv, grid);
  });
  HolderReport rep;
  rep.target = params.alpha + 0.5;
  const auto ms = mean_se(est);
  rep.mean = ms.mean;
  rep.std_err = ms.std_err;
  rep.tolerance = tolerance;
  rep.pass = std::abs(rep.mean - rep.target) <= tolerance;
  return rep;
}

SelfSimReport selfsim_check(std::span<const double> a_values, const ModelParams& params,
                            const McOptions& opts, double level) {
  params.validate();
  if (opts.n_paths < 2) throw DomainError("selfsim_check: needs at least two paths");
  const Grid grid(opts.n);
  std::vector<int> nodes;
  for (double a : a_values) {
    const double pos = a * grid.n;
    const int k = static_cast<int>(std::lround(pos));
    if (!(a > 0.0 && a <= 1.0) || std::abs(pos - k) > 1e-9)
      throw DomainError("selfsim_check: a = " + std::to_string(a) + " is not a grid node");
    nodes.push_back(k);
  }
  const auto factor = build_z_cholesky(grid, params);
  const std::size_t m = nodes.size();
  std::vector<double> samples(m * opts.n_paths);
  parallel_for(static_cast<std::size_t>(opts.n_paths), opts.threads, [&](std::size_t r) {
    const auto z = sample_z_path(factor, opts.seed, r);
    for (std::size_t i = 0; i < m; ++i) samples[i * opts.n_paths + r] = z[nodes[i]];
  });

  SelfSimReport rep;
  rep.level = level;
  rep.pass = true;
  for (std::size_t i = 0; i < m; ++i) {
    const std::span<const double> col(samples.data() + i * opts.n_paths, opts.n_paths);
    const double a = a_values[i];
    const double sd = self_similar_scale(a, params) * params.eta;
    const auto ks = ks_normal(col, 0.0, sd);
    double ss = 0.0;
    for (double x : col) ss += x * x;
    rep.a.push_back(a);
    rep.sample_variance.push_back(ss / static_cast<double>(col.size()));
    rep.theory_variance.push_back(sd * sd);
    rep.ks_statistic.push_back(ks.statistic);
    rep.p_value.push_back(ks.p_value);
    rep.pass = rep.pass && ks.p_value >= level;
  }
  return rep;
}

}  // namespace rbldp
