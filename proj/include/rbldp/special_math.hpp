#pragma once

namespace rbldp {

struct ModelParams;

/// Arguments of the Gauss hypergeometric function 2F1(a, b; c; z).
struct HypArgs {
  double a = 0.0;
  double b = 0.0;
  double c = 1.0;
  double z = 0.0;

  /// Throws DomainError unless c is not a non-positive integer, z is in [0, 1],
  /// and c - a - b > 0 when z == 1.
  void validate() const;
};

/// Gamma function for x > 0.
double gamma(double x);

/// Gauss hypergeometric function on z in [0, 1].
///
/// Power series for z <= 0.5, the z -> 1 - z connection formula on (0.5, 1)
/// and Gauss summation at z = 1. When c - a - b is (numerically) an integer the
/// connection formula is singular and the direct series is summed instead.
/// Throws ConvergenceError if a series does not settle within 10000 terms.
double hyp2f1(const HypArgs& args);

/// Power-law Volterra kernel eta * sqrt(2 alpha + 1) * (t - s)^alpha for 0 <= s < t.
double kernel(double s, double t, const ModelParams& params);

namespace detail {
// Direct Maclaurin series; exposed for cross-checks.
double hyp2f1_series(double a, double b, double c, double z);
// 1 / Gamma(x) for any real x, zero at the poles.
double reciprocal_gamma(double x);
}  // namespace detail

}  // namespace rbldp
