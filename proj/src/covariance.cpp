#include "rbldp/covariance.hpp"

#include <algorithm>
#include <cmath>

#include "rbldp/errors.hpp"
#include "rbldp/grid.hpp"
#include "rbldp/special_math.hpp"

namespace rbldp {

namespace {

void check_time(double t, const char* what) {
  if (!(t >= 0.0 && t <= 1.0)) throw DomainError(std::string(what) + ": time outside [0, 1]");
}

}  // namespace

void ModelParams::validate() const {
  if (!(alpha > -0.5 && alpha < 0.0)) throw DomainError("alpha must lie in (-1/2, 0)");
  if (!(eta > 0.0) || !std::isfinite(eta)) throw DomainError("eta must be positive");
  if (!(rho >= -1.0 && rho <= 1.0)) throw DomainError("rho must lie in [-1, 1]");
  if (!(v0 > 0.0) || !std::isfinite(v0)) throw DomainError("v0 must be positive");
}

Grid::Grid(int steps, double horizon_) : n(steps), horizon(horizon_) { validate(); }

std::vector<double> Grid::times() const {
  std::vector<double> t(size());
  for (int k = 0; k <= n; ++k) t[k] = time(k);
  return t;
}

void Grid::validate() const {
  if (n < 1) throw DomainError("grid needs at least one step");
  if (!(horizon > 0.0 && horizon <= 1.0)) throw DomainError("grid horizon must lie in (0, 1]");
}

double cov_zz(double s, double t, const ModelParams& params) {
  check_time(s, "cov_zz");
  check_time(t, "cov_zz");
  const double lo = std::min(s, t);
  const double hi = std::max(s, t);
  const double alpha = params.alpha;
  const double eta2 = params.eta * params.eta;
  if (lo == 0.0) return 0.0;
  if (lo == hi) return eta2 * std::pow(hi, 2.0 * alpha + 1.0);
  const double f = hyp2f1({1.0, -alpha, 2.0 + alpha, lo / hi});
  return eta2 * (2.0 * alpha + 1.0) / (alpha + 1.0) * std::pow(lo, 1.0 + alpha) *
         std::pow(hi, alpha) * f;
}

double cov_zb(double t, const ModelParams& params) {
  check_time(t, "cov_zb");
  return params.varrho() * std::pow(t, params.alpha + 1.0);
}

double cov_zw(double s, double t, const ModelParams& params) {
  check_time(s, "cov_zw");
  check_time(t, "cov_zw");
  const double p = params.alpha + 1.0;
  const double scale = params.eta * std::sqrt(2.0 * params.alpha + 1.0) / p;
  return scale * (std::pow(s, p) - std::pow(s - std::min(s, t), p));
}

double self_similar_scale(double a, const ModelParams& params) {
  if (!(a > 0.0)) throw DomainError("self_similar_scale: a must be positive");
  return std::pow(a, params.alpha + 0.5);
}

}  // namespace rbldp
