#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "rbldp/covariance.hpp"
#include "rbldp/grid.hpp"

namespace rbldp {

/// One sampled replica of the driving processes on a grid.
///
/// All arrays have grid.size() entries and start at zero;
/// b = rho * w + sqrt(1 - rho^2) * wperp elementwise.
struct PathBundle {
  Grid grid;
  std::vector<double> w;
  std::vector<double> wperp;
  std::vector<double> z;
  std::vector<double> b;
  std::uint64_t seed = 0;
  std::uint64_t replica = 0;
};

/// Lower Cholesky factor of the covariance of (Z_{t_1..t_n}, W_{t_1..t_n}),
/// or of Z_{t_1..t_n} alone when `joint` is false. t_0 is excluded since Z_0 = W_0 = 0.
class CholeskyFactor {
 public:
  CholeskyFactor(Grid grid, ModelParams params, bool joint, const Eigen::MatrixXd& lower,
                 double jitter);

  const Grid& grid() const noexcept { return grid_; }
  const ModelParams& params() const noexcept { return params_; }
  bool joint() const noexcept { return joint_; }
  int dim() const noexcept { return dim_; }
  /// Diagonal shift that was needed for the factorization to succeed.
  double jitter() const noexcept { return jitter_; }

  Eigen::MatrixXd lower() const;

  /// out = L * g for g of length dim(); fixed summation order.
  void apply(std::span<const double> g, std::span<double> out) const;

 private:
  Grid grid_;
  ModelParams params_;
  bool joint_;
  int dim_;
  double jitter_;
  std::vector<double> packed_;  // row-major lower triangle
};

/// Covariance of the stacked vector (Z_{t_1..t_n}, W_{t_1..t_n}).
Eigen::MatrixXd joint_covariance(const Grid& grid, const ModelParams& params);

/// Covariance of Z_{t_1..t_n}.
Eigen::MatrixXd z_covariance(const Grid& grid, const ModelParams& params);

/// Factorizes joint_covariance, escalating a diagonal jitter 1e-14 -> 1e-10
/// if the plain factorization fails. Throws FactorizationError past that.
CholeskyFactor build_joint_cholesky(const Grid& grid, const ModelParams& params);

/// Same as build_joint_cholesky for the Z block only.
CholeskyFactor build_z_cholesky(const Grid& grid, const ModelParams& params);

/// Draws replica `replica` of the run seeded by `seed`. Requires a joint factor.
PathBundle sample_path(const CholeskyFactor& factor, std::uint64_t seed, std::uint64_t replica);

/// Draws only the Z path (length n + 1, z[0] = 0). Works with either factor;
/// with a joint factor the values coincide with sample_path(...).z.
std::vector<double> sample_z_path(const CholeskyFactor& factor, std::uint64_t seed,
                                  std::uint64_t replica);

/// Replicas 0..n_paths-1. Output does not depend on `threads`.
std::vector<PathBundle> sample_bundle(const CholeskyFactor& factor, int n_paths,
                                      std::uint64_t seed, int threads = 1);

/// Z^eps = eps^(beta/2) Z.
std::vector<double> rescale_z(std::span<const double> z, const ModelParams& params, double eps);

/// B^eps = eps^(beta/2) B.
std::vector<double> rescale_b(std::span<const double> b, const ModelParams& params, double eps);

}  // namespace rbldp
