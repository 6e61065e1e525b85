#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "rbldp/errors.hpp"
#include "rbldp/rate_solver.hpp"
#include "rbldp/rng.hpp"

using namespace rbldp;

namespace {

RateProblem correlated(int n, double u, double eps = 1.0, double rho = -0.7) {
  RateProblem p;
  p.params = {-0.25, 1.0, rho, 0.04};
  p.grid = Grid(n);
  p.eps = eps;
  p.mode = RateMode::correlated;
  p.target_u = u;
  return p;
}

RateProblem uncorrelated(int n, double u, double eps = 1.0, double alpha = -0.25) {
  RateProblem p;
  p.params = {alpha, 1.0, 0.0, 0.04};
  p.grid = Grid(n);
  p.eps = eps;
  p.mode = RateMode::uncorrelated;
  p.target_u = u;
  return p;
}

std::vector<double> random_control(int n, std::uint64_t seed, double scale) {
  NormalStream s(seed, 0);
  std::vector<double> f(n);
  for (auto& x : f) x = scale * s.next();
  return f;
}

}  // namespace

TEST(RateProblem, Validation) {
  auto p = correlated(4, 0.1);
  EXPECT_NO_THROW(p.validate());
  p.params.rho = 0.0;
  EXPECT_THROW(p.validate(), DomainError);
  p = correlated(4, 0.1);
  p.grid = Grid(4, 0.5);
  EXPECT_THROW(p.validate(), DomainError);
  p = correlated(4, 0.1);
  p.eps = 0.0;
  EXPECT_THROW(p.validate(), DomainError);
  p = correlated(4, std::nan(""));
  EXPECT_THROW(solve_endpoint(p), DomainError);
}

TEST(EndpointMap, SingleStepByHand) {
  const auto p = correlated(1, 0.0, 0.5);
  const double f = 1.7;
  const double s0 = std::sqrt(0.04 * std::pow(0.5, 1.5));
  EXPECT_NEAR(endpoint_map_correlated(std::vector<double>{f}, p), s0 * -0.7 * f, 1e-16);
}

TEST(EndpointMap, MatchesForwardPath) {
  const auto p = correlated(8, 0.0);
  const auto f = random_control(8, 4, 1.0);
  const auto run = forward_path(f, {}, p);
  EXPECT_EQ(run[0], 0.0);
  EXPECT_DOUBLE_EQ(run[8], endpoint_map_correlated(f, p));
}

TEST(Gradient, AdjointMatchesCentralDifferences) {
  for (std::uint64_t seed : {1, 2, 3, 4, 5}) {
    const auto p = correlated(16, 0.0, seed % 2 ? 1.0 : 0.3);
    const auto f = random_control(16, seed, 1.5);
    const auto g = gradient_endpoint(f, p);
    double max_rel = 0.0;
    for (int i = 0; i < 16; ++i) {
      auto fp = f, fm = f;
      const double h = 1e-6 * std::max(1.0, std::abs(f[i]));
      fp[i] += h;
      fm[i] -= h;
      const double fd = (endpoint_map_correlated(fp, p) - endpoint_map_correlated(fm, p)) / (2 * h);
      max_rel = std::max(max_rel, std::abs(g[i] - fd) / std::max(std::abs(fd), 1e-8));
    }
    EXPECT_LE(max_rel, 1e-5) << "seed " << seed;
  }
}

TEST(SolveEndpoint, SingleStepClosedForm) {
  for (double eps : {1.0, 0.5, 0.1})
    for (double u : {0.1, -0.05, 0.3}) {
      const auto p = correlated(1, u, eps);
      const double expected = u * u / (2 * 0.04 * std::pow(eps, 1.5) * 0.49);
      const auto r = solve_endpoint(p);
      EXPECT_NEAR(r.value, expected, 1e-8 * expected) << eps << ' ' << u;
      EXPECT_TRUE(r.converged);
    }
}

TEST(SolveEndpoint, TwoStepBruteForce) {
  for (double u : {0.1, -0.08})
    for (double eps : {1.0, 0.4}) {
      const auto r = solve_endpoint(correlated(2, u, eps));
      EXPECT_NEAR(r.value, oracle::rate_n2_correlated(-0.25, 1.0, -0.7, 0.04, eps, u), 1e-4)
          << u << ' ' << eps;
    }
}

TEST(SolveEndpoint, UncorrelatedSingleStep) {
  const auto r = solve_endpoint(uncorrelated(1, 0.1, 0.5));
  const double expected = 0.01 / (2 * 0.04 * std::pow(0.5, 1.5));
  EXPECT_NEAR(r.value, expected, 1e-8 * expected);
}

TEST(SolveEndpoint, UncorrelatedTwoStepBruteForce) {
  const double u = 0.15;
  const double ref = oracle::rate_n2_uncorrelated(-0.25, 1.0, 0.04, 1.0, u);
  EXPECT_NEAR(solve_endpoint(uncorrelated(2, u)).value, ref, 1e-4);
  EXPECT_NEAR(solve_endpoint_uncorrelated_reduced(uncorrelated(2, u)).value, ref, 1e-4);
}

TEST(SolveEndpoint, ZeroTargetIsExactlyZero) {
  for (auto p : {correlated(16, 0.0), uncorrelated(16, 0.0)}) {
    const auto r = solve_endpoint(p);
    EXPECT_EQ(r.value, 0.0);
    for (double x : r.control.values) EXPECT_EQ(x, 0.0);
  }
  EXPECT_EQ(solve_endpoint_uncorrelated_reduced(uncorrelated(16, 0.0)).value, 0.0);
}

TEST(SolveEndpoint, ConstraintIsMet) {
  const auto p = correlated(32, 0.1);
  const auto r = solve_endpoint(p);
  EXPECT_LE(std::abs(endpoint_map_correlated(r.control.values, p) - 0.1), 1e-8);
  EXPECT_EQ(r.multistart_best_of, 8);
  EXPECT_GE(r.best_start, 0);
  EXPECT_NEAR(r.value, rkhs_cost(r.control.values, p.grid), 1e-14);
}

TEST(SolveEndpoint, ReducedAndFullUncorrelatedAgree) {
  const double us[] = {0.05, 0.1, 0.2, -0.15, 0.3};
  const double eps[] = {1.0, 0.5, 1.0, 0.25, 0.8};
  for (int i = 0; i < 5; ++i) {
    const auto p = uncorrelated(16, us[i], eps[i]);
    const auto full = solve_endpoint(p);
    const auto reduced = solve_endpoint_uncorrelated_reduced(p);
    EXPECT_NEAR(full.value, reduced.value, 1e-6) << "instance " << i;
  }
}

TEST(SolveEndpoint, UncorrelatedIsEven) {
  for (double u : {0.07, 0.2}) {
    const double plus = solve_endpoint(uncorrelated(16, u)).value;
    const double minus = solve_endpoint(uncorrelated(16, -u)).value;
    EXPECT_NEAR(plus, minus, 1e-10);
    const double rplus = solve_endpoint_uncorrelated_reduced(uncorrelated(16, u)).value;
    const double rminus = solve_endpoint_uncorrelated_reduced(uncorrelated(16, -u)).value;
    EXPECT_NEAR(rplus, rminus, 1e-10);
  }
}

TEST(SolveEndpoint, ReducedRejectsCorrelatedMode) {
  EXPECT_THROW(solve_endpoint_uncorrelated_reduced(correlated(4, 0.1)), DomainError);
}

TEST(SolveEndpoint, GridRefinementIsStable) {
  const double coarse = solve_endpoint(correlated(64, 0.1)).value;
  const double fine = solve_endpoint(correlated(128, 0.1)).value;
  EXPECT_LE(std::abs(fine - coarse), 0.02 * fine);
}

TEST(SolveEndpoint, DeterministicAcrossCalls) {
  const auto a = solve_endpoint(correlated(16, 0.1));
  const auto b = solve_endpoint(correlated(16, 0.1));
  EXPECT_EQ(a.value, b.value);
  EXPECT_EQ(a.control.values, b.control.values);
}

TEST(SolvePath, RecoversReachablePath) {
  auto p = correlated(16, 0.0);
  const auto f = random_control(16, 8, 0.8);
  p.target_path = forward_path(f, {}, p);
  const auto r = solve_path(p);
  EXPECT_TRUE(r.converged);
  ASSERT_EQ(r.residual_profile.size(), 16u);
  const auto run = forward_path(r.control.values, {}, p);
  for (int k = 0; k <= 16; ++k) EXPECT_NEAR(run[k], p.target_path[k], 1e-8);
  EXPECT_LE(r.value, rkhs_cost(f, p.grid) + 1e-8);
}

TEST(SolvePath, UncorrelatedPath) {
  auto p = uncorrelated(8, 0.0);
  const auto f1 = random_control(8, 2, 0.5);
  const auto f2 = random_control(8, 3, 0.5);
  p.target_path = forward_path(f1, f2, p);
  const auto r = solve_path(p);
  const auto run = forward_path(r.control.values, r.control2.values, p);
  for (int k = 0; k <= 8; ++k) EXPECT_NEAR(run[k], p.target_path[k], 1e-8);
  EXPECT_LE(r.value, rkhs_cost2(f1, f2, p.grid) + 1e-8);
}

TEST(SolvePath, ZeroPathAndValidation) {
  auto p = correlated(8, 0.0);
  p.target_path.assign(9, 0.0);
  EXPECT_EQ(solve_path(p).value, 0.0);
  p.target_path.assign(8, 0.0);
  EXPECT_THROW(solve_path(p), DomainError);
  p.target_path.assign(9, 0.1);
  EXPECT_THROW(solve_path(p), DomainError);
}
