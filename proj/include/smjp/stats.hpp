#pragma once

#include <functional>
#include <span>
#include <vector>

namespace smjp {

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
  std::size_t n = 0;
};

/// Survival function of the Kolmogorov distribution, P(K > x).
double kolmogorov_survival(double x);

/// One-sample Kolmogorov-Smirnov test against a continuous CDF. The p-value uses
/// the asymptotic law with Stephens' small-sample correction.
KsResult ks_test(std::vector<double> sample, const std::function<double(double)>& cdf);

/// KS test against Exp(rate).
KsResult ks_test_exponential(std::span<const double> sample, double rate);

double mean(std::span<const double> xs);

}  // namespace smjp
