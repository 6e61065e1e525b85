#include "rbldp/rbergomi.hpp"

#include <cmath>
#include <string>

#include "rbldp/errors.hpp"
#include "rbldp/stats.hpp"

namespace rbldp {

std::vector<double> vol_from_z(std::span<const double> z, const Grid& grid,
                               const ModelParams& params, double eps, long long replica) {
  if (!(eps > 0.0)) throw DomainError("vol_path: eps must be positive");
  if (static_cast<int>(z.size()) != grid.size()) throw DomainError("vol_path: size mismatch");
  const double beta = params.beta();
  const double z_scale = std::pow(eps, beta / 2.0);
  const double level = std::pow(eps, 1.0 + beta) * params.v0;
  const double half_eta2 = 0.5 * params.eta * params.eta;
  std::vector<double> v(z.size());
  for (int k = 0; k <= grid.n; ++k) {
    const double expo = z_scale * z[k] - half_eta2 * std::pow(eps * grid.time(k), beta);
    if (expo > kExponentGuard)
      throw OverflowError("variance exponent " + std::to_string(expo) + " exceeds guard" +
                              (replica >= 0 ? " in replica " + std::to_string(replica) : ""),
                          replica);
    v[k] = level * std::exp(expo);
  }
  return v;
}

std::vector<double> vol_path(const PathBundle& bundle, const ModelParams& params, double eps) {
  return vol_from_z(bundle.z, bundle.grid, params, eps, static_cast<long long>(bundle.replica));
}

std::vector<double> logprice_path(std::span<const double> v, std::span<const double> b,
                                  const Grid& grid) {
  if (static_cast<int>(v.size()) != grid.size() || b.size() != v.size())
    throw DomainError("logprice_path: size mismatch");
  const double dt = grid.dt();
  std::vector<double> x(v.size(), 0.0);
  for (int k = 0; k < grid.n; ++k)
    x[k + 1] = x[k] - 0.5 * v[k] * dt + std::sqrt(v[k]) * (b[k + 1] - b[k]);
  return x;
}

std::vector<double> logprice_path(const ModelPaths& paths, const ModelParams& params) {
  const auto b_eps = rescale_b(paths.bundle.b, params, paths.eps);
  return logprice_path(paths.v, b_eps, paths.bundle.grid);
}

ModelPaths build_model_paths(const PathBundle& bundle, const ModelParams& params, double eps) {
  ModelPaths out;
  out.bundle = bundle;
  out.eps = eps;
  out.v = vol_path(bundle, params, eps);
  out.x = logprice_path(out, params);
  return out;
}

double holder_estimate(std::span<const double> logv, const Grid& grid) {
  constexpr int kMaxLag = 5;
  if (grid.n < 256) throw DomainError("holder_estimate: needs n >= 256");
  if (static_cast<int>(logv.size()) != grid.size())
    throw DomainError("holder_estimate: size mismatch");
  std::vector<double> log_lag, log_m;
  std::vector<double> sq;
  for (int lag = 1; lag <= kMaxLag; ++lag) {
    sq.clear();
    for (std::size_t k = 0; k + lag < logv.size(); ++k) {
      const double d = logv[k + lag] - logv[k];
      sq.push_back(d * d);
    }
    const double m = pairwise_sum(sq) / static_cast<double>(sq.size());
    if (!(m > 0.0) || !std::isfinite(m))
      throw DomainError("holder_estimate: degenerate path, variogram slope undefined");
    log_lag.push_back(std::log(lag * grid.dt()));
    log_m.push_back(std::log(m));
  }
  return ols(log_lag, log_m).slope / 2.0;
}

}  // namespace rbldp
