#pragma once
// Subdivision oracle for the cable crossing law: the cable between two
// vertices is cut into m series edges of conductance m*C and the interior
// Gaussian bridge is sampled step by step given both endpoints.

#include <boost/random/normal_distribution.hpp>
#include <cmath>
#include <cstdint>
#include <random>

namespace oracle {

struct BridgeEstimate {
  double raw = 0, raw_se = 0;              // all m-1 interior points positive
  double corrected = 0, corrected_se = 0;  // plus the sub-cable crossing factors
  long samples = 0;
};

inline BridgeEstimate subdivided_bridge(double u, double v, double C, int m, long samples, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  boost::random::normal_distribution<double> nd;
  const double var = 1.0 / (m * C);  // per sub-edge increment variance
  const double k = 2.0 * m * C;
  double sr = 0, sr2 = 0, sc = 0, sc2 = 0;
  for (long s = 0; s < samples; ++s) {
    double b = u, w = 1.0;
    bool pos = u > 0 && v > 0;
    for (int i = 0; i < m && pos; ++i) {
      const int r = m - i;
      const double next = (r == 1) ? v : b + (v - b) / r + std::sqrt(var * (r - 1) / r) * nd(rng);
      if (!(next > 0)) {
        pos = false;
        break;
      }
      const double e = k * b * next;
      if (e < 40) w *= -std::expm1(-e);
      b = next;
    }
    const double x = pos ? 1.0 : 0.0, y = pos ? w : 0.0;
    sr += x;
    sr2 += x * x;
    sc += y;
    sc2 += y * y;
  }
  BridgeEstimate out;
  out.samples = samples;
  const double n = static_cast<double>(samples);
  out.raw = sr / n;
  out.raw_se = std::sqrt(std::max(0.0, sr2 / n - out.raw * out.raw) / n);
  out.corrected = sc / n;
  out.corrected_se = std::sqrt(std::max(0.0, sc2 / n - out.corrected * out.corrected) / n);
  return out;
}

}  // namespace oracle
