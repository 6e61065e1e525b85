#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "rbldp/covariance.hpp"
#include "rbldp/errors.hpp"
#include "rbldp/special_math.hpp"

using namespace rbldp;

namespace {

void expect_rel(double actual, double expected, double tol) {
  EXPECT_LE(std::abs(actual - expected), tol * std::abs(expected))
      << "actual " << actual << " expected " << expected;
}

}  // namespace

TEST(Gamma, KnownValues) {
  expect_rel(rbldp::gamma(1.0), 1.0, 1e-12);
  expect_rel(rbldp::gamma(0.5), 1.7724538509055160, 1e-12);
  // Gamma(3.5) = 2.5 * 1.5 * 0.5 * sqrt(pi)
  expect_rel(rbldp::gamma(3.5), 2.5 * 1.5 * 0.5 * std::sqrt(std::numbers::pi), 1e-12);
  expect_rel(rbldp::gamma(3.5), 3.3233509704478426, 1e-12);
}

TEST(Gamma, RejectsNonPositive) {
  EXPECT_THROW(rbldp::gamma(0.0), DomainError);
  EXPECT_THROW(rbldp::gamma(-1.5), DomainError);
}

TEST(Hyp2f1, ZeroArgumentIsOne) { EXPECT_EQ(hyp2f1({1.0, 0.3, 1.7, 0.0}), 1.0); }

TEST(Hyp2f1, GaussSummationAtOne) {
  // (1 + alpha)/(1 + 2 alpha) at alpha = -0.25
  expect_rel(hyp2f1({1.0, 0.25, 1.75, 1.0}), 1.5, 1e-10);
}

TEST(Hyp2f1, GaussSummationMatchesEulerIntegralNearOne) {
  // Euler integral at z = 1 - 1e-8 sits within O(sqrt(1e-8)) of the z = 1 value
  const double near = oracle::hyp2f1_euler(1.0, 0.25, 1.75, 1.0 - 1e-8);
  EXPECT_NEAR(hyp2f1({1.0, 0.25, 1.75, 1.0}), near, 2e-4);
  expect_rel(hyp2f1({1.0, 0.25, 1.75, 1.0 - 1e-8}), near, 1e-9);
}

TEST(Hyp2f1, EulerQuadratureValue) {
  // frozen from the Euler integral (50-digit quadrature)
  expect_rel(hyp2f1({1.0, 0.25, 1.75, 0.5}), 1.0952202196882645, 1e-10);
  expect_rel(hyp2f1({1.0, 0.25, 1.75, 0.5}), oracle::hyp2f1_euler(1.0, 0.25, 1.75, 0.5), 1e-10);
}

TEST(Hyp2f1, GaussIdentityAcrossAlpha) {
  for (double alpha = -0.49; alpha < 0.0; alpha += 0.02) {
    const double value = hyp2f1({1.0, -alpha, 2.0 + alpha, 1.0});
    EXPECT_NEAR(value, (1.0 + alpha) / (1.0 + 2.0 * alpha), 1e-10) << "alpha " << alpha;
  }
}

TEST(Hyp2f1, SeriesAndQuadratureAgreeOnGrid) {
  const double as[] = {1.0, 0.5, -0.3};
  const double bs[] = {0.25, 0.4, 0.8};
  const double cs[] = {1.75, 1.3, 2.6};
  for (double a : as)
    for (double b : bs)
      for (double c : cs)
        for (double z : {0.0, 0.25, 0.5, 0.9}) {
          const double ref = oracle::hyp2f1_euler(a, b, c, z);
          EXPECT_NEAR(hyp2f1({a, b, c, z}), ref, 1e-9 * std::max(1.0, std::abs(ref)))
              << a << ' ' << b << ' ' << c << ' ' << z;
        }
}

TEST(Hyp2f1, ConnectionFormulaMatchesDirectSeries) {
  for (double z : {0.55, 0.7, 0.85, 0.95})
    expect_rel(hyp2f1({1.0, 0.3, 1.7, z}), detail::hyp2f1_series(1.0, 0.3, 1.7, z), 1e-11);
}

TEST(Hyp2f1, IntegerGapFallsBackToSeries) {
  // c - a - b = 1: connection formula is singular
  const double ref = oracle::hyp2f1_euler(0.5, 0.5, 2.0, 0.8);
  expect_rel(hyp2f1({0.5, 0.5, 2.0, 0.8}), ref, 1e-10);
}

TEST(Hyp2f1, DomainErrors) {
  EXPECT_THROW(hyp2f1({1.0, 0.5, 0.0, 0.3}), DomainError);
  EXPECT_THROW(hyp2f1({1.0, 0.5, -2.0, 0.3}), DomainError);
  EXPECT_THROW(hyp2f1({1.0, 0.5, 1.5, 1.2}), DomainError);
  EXPECT_THROW(hyp2f1({1.0, 0.5, 1.5, -0.1}), DomainError);
  EXPECT_THROW(hyp2f1({1.0, 0.5, 1.5, 1.0}), DomainError);  // c - a - b = 0
}

TEST(Hyp2f1, NonConvergenceIsReported) {
  // integer gap forces the direct series, which cannot settle this close to 1
  EXPECT_THROW(hyp2f1({1.0, 1.0, 2.0, 1.0 - 1e-9}), ConvergenceError);
}

TEST(Kernel, DirectValues) {
  const ModelParams p{-0.25, 1.0, 0.0, 0.04};
  EXPECT_NEAR(kernel(0.0, 1.0, p), 0.7071067811865476, 1e-15);
  EXPECT_NEAR(kernel(0.5, 1.0, p), 0.8408964152537145, 1e-15);
  const ModelParams q{-0.4, 2.0, 0.0, 0.04};
  const double via_log = 2.0 * std::exp(0.5 * std::log(0.2) - 0.4 * std::log(0.1));
  EXPECT_NEAR(kernel(0.9, 1.0, q), via_log, 1e-13);
  EXPECT_NEAR(kernel(0.9, 1.0, q), 2.2466995250459163, 1e-13);
}

TEST(Kernel, RejectsOrderedArguments) {
  const ModelParams p;
  EXPECT_THROW(kernel(0.5, 0.5, p), DomainError);
  EXPECT_THROW(kernel(0.7, 0.5, p), DomainError);
}

TEST(Kernel, SquareIntegralIsFinite) {
  // int_0^t K(s, t)^2 ds = eta^2 t^(2 alpha + 1) despite the singularity at s = t
  for (double alpha : {-0.45, -0.25, -0.1})
    for (double t : {0.3, 1.0}) {
      const ModelParams p{alpha, 1.3, 0.0, 0.04};
      // the kernel depends on d = t - s only and K^2 / d^(2 alpha) is constant
      const double quad = oracle::integrate_power(
          [&](double d) {
            d = std::max(d, 1e-300);
            return std::pow(kernel(0.0, d, p), 2) / std::pow(d, 2 * alpha);
          },
          2 * alpha, t, 1e-13);
      EXPECT_NEAR(quad, 1.3 * 1.3 * std::pow(t, 2 * alpha + 1), 1e-8);
    }
}
