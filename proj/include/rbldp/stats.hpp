#pragma once

#include <span>
#include <vector>

namespace rbldp {

/// Pairwise (cascade) summation in a fixed order.
double pairwise_sum(std::span<const double> values);

struct MeanSE {
  double mean = 0.0;
  double std_err = 0.0;
};

MeanSE mean_se(std::span<const double> values);

/// Sample covariance of paired samples with the standard error of the estimate.
MeanSE covariance_se(std::span<const double> x, std::span<const double> y);

struct Summary {
  double mean = 0.0;
  double std_err = 0.0;
  std::vector<double> probs;
  std::vector<double> quantiles;
};

inline constexpr double kDefaultProbs[] = {0.05, 0.25, 0.5, 0.75, 0.95};

/// Mean, standard error and linearly interpolated quantiles.
Summary summarize(std::span<const double> values,
                  std::span<const double> probs = kDefaultProbs);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};

LinearFit ols(std::span<const double> x, std::span<const double> y);

double normal_cdf(double x);

/// Kolmogorov limiting survival function Q(lambda) = 2 sum (-1)^(k-1) exp(-2 k^2 lambda^2).
double kolmogorov_q(double lambda);

struct KSResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

/// One-sample KS test of `sample` against N(mean, sd^2).
KSResult ks_normal(std::span<const double> sample, double mean, double sd);

KSResult ks_two_sample(std::span<const double> a, std::span<const double> b);

}  // namespace rbldp
