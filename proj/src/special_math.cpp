#include "rbldp/special_math.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "rbldp/covariance.hpp"
#include "rbldp/errors.hpp"

namespace rbldp {

namespace {

constexpr int kMaxTerms = 10000;
constexpr double kUnderflowFloor = 1e-300;
constexpr double kSeriesRelTol = 1e-17;
// Distance of c - a - b from an integer below which the connection formula is not used.
constexpr double kIntegerGap = 1e-6;

bool is_nonpositive_integer(double x) { return x <= 0.0 && x == std::nearbyint(x); }

}  // namespace

void HypArgs::validate() const {
  if (!std::isfinite(a) || !std::isfinite(b) || !std::isfinite(c) || !std::isfinite(z))
    throw DomainError("hyp2f1: non-finite argument");
  if (is_nonpositive_integer(c)) throw DomainError("hyp2f1: c is a non-positive integer");
  if (z < 0.0 || z > 1.0) throw DomainError("hyp2f1: z outside [0, 1]");
  if (z == 1.0 && !(c - a - b > 0.0))
    throw DomainError("hyp2f1: z = 1 requires c - a - b > 0");
}

double gamma(double x) {
  if (!(x > 0.0)) throw DomainError("gamma: argument must be positive");
  return std::tgamma(x);
}

namespace detail {

double reciprocal_gamma(double x) {
  if (is_nonpositive_integer(x)) return 0.0;
  return 1.0 / std::tgamma(x);
}

double hyp2f1_series(double a, double b, double c, double z) {
  double sum = 1.0;
  double term = 1.0;
  int small_in_a_row = 0;
  for (int k = 0; k < kMaxTerms; ++k) {
    term *= (a + k) * (b + k) / ((c + k) * (k + 1.0)) * z;
    sum += term;
    if (term == 0.0) return sum;  // terminating series
    if (std::abs(term) <= kSeriesRelTol * std::abs(sum) || std::abs(term) < kUnderflowFloor) {
      if (++small_in_a_row == 2) return sum;
    } else {
      small_in_a_row = 0;
    }
  }
  throw ConvergenceError("hyp2f1: series did not converge within " + std::to_string(kMaxTerms) +
                         " terms (z = " + std::to_string(z) + ")");
}

}  // namespace detail

double hyp2f1(const HypArgs& args) {
  args.validate();
  const double a = args.a, b = args.b, c = args.c, z = args.z;
  using detail::reciprocal_gamma;

  if (z == 0.0) return 1.0;
  if (z == 1.0)
    return std::tgamma(c) * std::tgamma(c - a - b) * reciprocal_gamma(c - a) *
           reciprocal_gamma(c - b);
  if (z <= 0.5) return detail::hyp2f1_series(a, b, c, z);

  const double m = c - a - b;
  if (std::abs(m - std::nearbyint(m)) < kIntegerGap) return detail::hyp2f1_series(a, b, c, z);

  const double w = 1.0 - z;
  const double gc = std::tgamma(c);
  const double first = gc * std::tgamma(m) * reciprocal_gamma(c - a) * reciprocal_gamma(c - b);
  const double second = gc * std::tgamma(-m) * reciprocal_gamma(a) * reciprocal_gamma(b);
  double value = 0.0;
  if (first != 0.0) value += first * detail::hyp2f1_series(a, b, 1.0 - m, w);
  if (second != 0.0)
    value += second * std::pow(w, m) * detail::hyp2f1_series(c - a, c - b, 1.0 + m, w);
  return value;
}

double kernel(double s, double t, const ModelParams& params) {
  if (!(s >= 0.0 && s < t && t <= 1.0)) throw DomainError("kernel: requires 0 <= s < t <= 1");
  return params.eta * std::sqrt(2.0 * params.alpha + 1.0) * std::pow(t - s, params.alpha);
}

}  // namespace rbldp
