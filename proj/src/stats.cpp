#include "smjp/stats.hpp"

#include <algorithm>
#include <cmath>

namespace smjp {

double kolmogorov_survival(double x) {
  if (x <= 0.0) return 1.0;
  if (x < 1.18) {
    // Small-x form converges faster: sqrt(2 pi)/x * sum exp(-(2k-1)^2 pi^2 / (8 x^2)).
    const double y = std::exp(-M_PI * M_PI / (8.0 * x * x));
    double sum = 0.0;
    for (int k = 1; k <= 6; ++k) sum += std::pow(y, (2 * k - 1) * (2 * k - 1));
    return std::clamp(1.0 - std::sqrt(2.0 * M_PI) / x * sum, 0.0, 1.0);
  }
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * x * x);
    sum += (k % 2 ? 1.0 : -1.0) * term;
    if (term < 1e-17) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

KsResult ks_test(std::vector<double> sample, const std::function<double(double)>& cdf) {
  KsResult out;
  out.n = sample.size();
  if (sample.empty()) return out;
  std::sort(sample.begin(), sample.end());
  const auto n = static_cast<double>(sample.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double f = cdf(sample[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  const double root = std::sqrt(n);
  out.statistic = d;
  out.p_value = kolmogorov_survival((root + 0.12 + 0.11 / root) * d);
  return out;
}

KsResult ks_test_exponential(std::span<const double> sample, double rate) {
  return ks_test(std::vector<double>(sample.begin(), sample.end()),
                 [rate](double x) { return x <= 0.0 ? 0.0 : -std::expm1(-rate * x); });
}

double mean(std::span<const double> xs) {
  if (xs.empty()) return 0.0;
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

}  // namespace smjp
