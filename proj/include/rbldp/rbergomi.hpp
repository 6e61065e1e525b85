#pragma once

#include <span>
#include <vector>

#include "rbldp/covariance.hpp"
#include "rbldp/path_sim.hpp"

namespace rbldp {

/// Variance and log-price paths built from a bundle at noise level eps.
struct ModelPaths {
  PathBundle bundle;
  std::vector<double> v;
  std::vector<double> x;
  double eps = 1.0;
};

/// Exponents of the variance map above this raise OverflowError.
inline constexpr double kExponentGuard = 700.0;

/// v_k = eps^(1+beta) v0 exp(Z^eps_{t_k} - eta^2/2 (eps t_k)^beta) from an unscaled Z path.
/// eps = 1 gives the rough Bergomi variance itself.
std::vector<double> vol_from_z(std::span<const double> z, const Grid& grid,
                               const ModelParams& params, double eps, long long replica = -1);

std::vector<double> vol_path(const PathBundle& bundle, const ModelParams& params, double eps);

/// Left-point Euler scheme X_{k+1} = X_k - v_k dt / 2 + sqrt(v_k) (b_{k+1} - b_k).
std::vector<double> logprice_path(std::span<const double> v, std::span<const double> b,
                                  const Grid& grid);

/// Log price for model paths; B is rescaled to B^eps to match v.
std::vector<double> logprice_path(const ModelPaths& paths, const ModelParams& params);

ModelPaths build_model_paths(const PathBundle& bundle, const ModelParams& params, double eps);

/// Roughness estimate from the variogram of log v at lags 1..5.
///
/// Regresses log of the mean squared increment on log lag and returns half the
/// slope. Requires n >= 256; a constant path has no defined slope and raises
/// DomainError.
double holder_estimate(std::span<const double> logv, const Grid& grid);

}  // namespace rbldp
