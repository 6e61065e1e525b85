#include "rbldp/operators.hpp"

#include <cmath>

#include "rbldp/errors.hpp"
#include "rbldp/rbergomi.hpp"

namespace rbldp {

namespace {

void check_control(std::span<const double> f, const Grid& grid) {
  if (static_cast<int>(f.size()) != grid.n) throw DomainError("control must have n entries");
  for (double x : f)
    if (!std::isfinite(x)) throw DomainError("control has non-finite entries");
}

}  // namespace

std::vector<double> volterra_weights(const Grid& grid, const ModelParams& params) {
  const double p = params.alpha + 1.0;
  const double scale =
      params.eta * std::sqrt(2.0 * params.alpha + 1.0) * std::pow(grid.dt(), p) / p;
  std::vector<double> w(grid.n + 1, 0.0);
  for (int d = 1; d <= grid.n; ++d) w[d] = scale * (std::pow(d, p) - std::pow(d - 1, p));
  return w;
}

std::vector<double> apply_volterra(std::span<const double> f, const Grid& grid,
                                   const ModelParams& params) {
  check_control(f, grid);
  const auto w = volterra_weights(grid, params);
  std::vector<double> g(grid.size(), 0.0);
  for (int k = 1; k <= grid.n; ++k) {
    double s = 0.0;
    for (int j = 0; j < k; ++j) s += w[k - j] * f[j];
    g[k] = s;
  }
  return g;
}

std::vector<double> apply_rho(std::span<const double> f, const Grid& grid, double rho) {
  check_control(f, grid);
  const double dt = grid.dt();
  std::vector<double> h(grid.size(), 0.0);
  double s = 0.0;
  for (int k = 1; k <= grid.n; ++k) {
    s += f[k - 1];
    h[k] = rho * s * dt;
  }
  return h;
}

std::vector<double> apply_m(std::span<const double> x, const Grid& grid,
                            const ModelParams& params, double eps) {
  if (!(eps > 0.0)) throw DomainError("apply_m: eps must be positive");
  if (static_cast<int>(x.size()) != grid.size()) throw DomainError("apply_m: size mismatch");
  const double beta = params.beta();
  const double level = params.v0 * std::pow(eps, 1.0 + beta);
  const double half_eta2 = 0.5 * params.eta * params.eta;
  std::vector<double> out(x.size());
  for (int k = 0; k <= grid.n; ++k) {
    const double expo = x[k] - half_eta2 * std::pow(eps * grid.time(k), beta);
    if (expo > kExponentGuard) throw OverflowError("apply_m: exponent exceeds guard", -1);
    out[k] = level * std::exp(expo);
  }
  return out;
}

double integral_I(std::span<const double> x, std::span<const double> y, const Grid& grid) {
  if (static_cast<int>(x.size()) != grid.size() || y.size() != x.size())
    throw DomainError("integral_I: size mismatch");
  double s = 0.0;
  for (int k = 0; k < grid.n; ++k) {
    if (x[k] < 0.0) throw DomainError("integral_I: negative integrand");
    s += std::sqrt(x[k]) * (y[k + 1] - y[k]);
  }
  if (x[grid.n] < 0.0) throw DomainError("integral_I: negative integrand");
  return s;
}

double rkhs_cost(std::span<const double> f, const Grid& grid) {
  check_control(f, grid);
  double s = 0.0;
  for (double v : f) s += v * v;
  return 0.5 * s * grid.dt();
}

double rkhs_cost2(std::span<const double> f1, std::span<const double> f2, const Grid& grid) {
  return rkhs_cost(f1, grid) + rkhs_cost(f2, grid);
}

}  // namespace rbldp
