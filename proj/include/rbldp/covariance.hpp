#pragma once

#include <cmath>

namespace rbldp {

/// Parameters of the rough Bergomi model.
///
/// alpha in (-1/2, 0) is the kernel exponent (Hurst index alpha + 1/2), eta > 0
/// the vol-of-vol, rho in [-1, 1] the spot/vol correlation and v0 > 0 the
/// initial variance.
struct ModelParams {
  double alpha = -0.25;
  double eta = 1.0;
  double rho = 0.0;
  double v0 = 0.04;

  /// 2 alpha + 1, in (0, 1).
  double beta() const noexcept { return 2.0 * alpha + 1.0; }

  /// rho * eta * sqrt(2 alpha + 1) / (alpha + 1), the Z/B covariance scale.
  double varrho() const noexcept {
    return rho * eta * std::sqrt(2.0 * alpha + 1.0) / (alpha + 1.0);
  }

  void validate() const;
};

/// E(Z_s Z_t) in closed form via 2F1(1, -alpha; 2 + alpha; (s^t)/(s v t)).
double cov_zz(double s, double t, const ModelParams& params);

/// E(Z_t B_t) = varrho * t^(alpha + 1).
double cov_zb(double t, const ModelParams& params);

/// E(Z_s W_t) = eta sqrt(2 alpha + 1)/(alpha + 1) * (s^(alpha+1) - (s - s^t)^(alpha+1)).
double cov_zw(double s, double t, const ModelParams& params);

/// Self-similarity factor a^(alpha + 1/2): Z_{a.} has the law of a^(alpha+1/2) Z.
double self_similar_scale(double a, const ModelParams& params);

}  // namespace rbldp
