#pragma once
// Small statistics helpers for the Monte Carlo tests.

#include <cmath>
#include <cstddef>
#include <vector>

namespace oracle {

/// Accumulates sums of x_i and x_i x_j for a fixed list of probe indices.
struct CovarianceAccumulator {
  std::vector<std::size_t> probes;
  std::vector<double> s1;  // sum x_i
  std::vector<double> s2;  // sum x_i x_j, row-major over probes
  std::vector<double> s4;  // sum (x_i x_j)^2
  long n = 0;
  explicit CovarianceAccumulator(std::vector<std::size_t> p)
      : probes(std::move(p)), s1(probes.size()), s2(probes.size() * probes.size()),
        s4(probes.size() * probes.size()) {}
  template <class V>
  void add(const V& x) {
    const std::size_t m = probes.size();
    std::vector<double> v(m);
    for (std::size_t a = 0; a < m; ++a) v[a] = x[probes[a]];
    for (std::size_t a = 0; a < m; ++a) {
      s1[a] += v[a];
      for (std::size_t b = a; b < m; ++b) {
        const double p = v[a] * v[b];
        s2[a * m + b] += p;
        s4[a * m + b] += p * p;
      }
    }
    ++n;
  }
  /// E[x_a x_b] estimate (the field is centred, so no mean correction).
  double cov(std::size_t a, std::size_t b) const {
    if (a > b) std::swap(a, b);
    return s2[a * probes.size() + b] / n;
  }
  double se(std::size_t a, std::size_t b) const {
    if (a > b) std::swap(a, b);
    const double m = s2[a * probes.size() + b] / n;
    const double v = s4[a * probes.size() + b] / n - m * m;
    return std::sqrt(v / n);
  }
};

inline double normal_quantile(double p) {
  // Acklam's rational approximation refined by one Newton step.
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                             1.383577518672690e+02, -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                             6.680131188771972e+01, -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                             -2.549732539343734e+00, 4.374664141464968e+00, 2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                             3.754408661907416e+00};
  double x;
  if (p < 0.02425) {
    const double q = std::sqrt(-2 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
  } else if (p > 1 - 0.02425) {
    const double q = std::sqrt(-2 * std::log(1 - p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
  } else {
    const double q = p - 0.5, r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1);
  }
  const double e = 0.5 * std::erfc(-x / std::sqrt(2.0)) - p;
  return x - e * std::sqrt(2 * M_PI) * std::exp(x * x / 2);
}

}  // namespace oracle
