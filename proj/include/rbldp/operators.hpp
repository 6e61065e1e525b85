#pragma once

#include <span>
#include <vector>

#include "rbldp/covariance.hpp"
#include "rbldp/grid.hpp"

namespace rbldp {

/// Piecewise-constant L2 function: values[j] on [t_j, t_{j+1}).
struct Control {
  std::vector<double> values;
};

/// Weights w[d] = int over cell j of K(u, t_k) du for d = k - j >= 1 (w[0] = 0).
/// The Volterra matrix is Toeplitz on a uniform grid: A_{kj} = w[k - j], j < k.
std::vector<double> volterra_weights(const Grid& grid, const ModelParams& params);

/// (I^K f)(t_k) = sum_{j<k} f_j int_{t_j}^{t_{j+1}} K(u, t_k) du, cells integrated exactly.
std::vector<double> apply_volterra(std::span<const double> f, const Grid& grid,
                                   const ModelParams& params);

/// (I^rho f)(t_k) = rho sum_{j<k} f_j dt.
std::vector<double> apply_rho(std::span<const double> f, const Grid& grid, double rho);

/// (m x)(t_k, eps) = v0 eps^(1+beta) exp(x(t_k) - eta^2/2 (eps t_k)^beta).
std::vector<double> apply_m(std::span<const double> x, const Grid& grid,
                            const ModelParams& params, double eps);

/// Left-point sum of sqrt(x_k) (y_{k+1} - y_k) over [0, 1]. Negative x raises DomainError.
double integral_I(std::span<const double> x, std::span<const double> y, const Grid& grid);

/// 1/2 ||f||^2_{L2}.
double rkhs_cost(std::span<const double> f, const Grid& grid);
double rkhs_cost2(std::span<const double> f1, std::span<const double> f2, const Grid& grid);

}  // namespace rbldp
