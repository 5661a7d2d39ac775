#pragma once
// Independent reference computations for the segment energy problem.

#include <Eigen/Dense>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <cmath>
#include <vector>

#include "gff2d/continuum_capacity.hpp"

namespace oracle {

/// Energy of the uniform measure on [0,1]: 2 int_0^1 (1-s) (2/pi) K0(2s) ds,
/// evaluated with the standard library Bessel function.
inline double uniform_energy_exact() {
  boost::math::quadrature::tanh_sinh<double> ts;
  auto f = [](double s) { return s > 0 ? 2 * (1 - s) * (2 / M_PI) * std::cyl_bessel_k(0.0, 2 * s) : 0.0; };
  return ts.integrate(f, 0.0, 1.0, 1e-14);
}

/// Midpoint Riemann double sum for the uniform measure; the singular
/// diagonal cells use the cell-averaged kernel.
inline double uniform_energy_riemann(int n) {
  const double h = 1.0 / n;
  double off = 0;
  for (int d = 1; d < n; ++d)
    off += 2.0 * (n - d) * (2 / M_PI) * std::cyl_bessel_k(0.0, 2 * d * h);
  const double diag = n * gff2d::segment_kernel_cell_average(n, 0);
  return (off + diag) * h * h;
}

/// Minimizer from the first-order conditions A mu = c 1, sum mu = 1, valid
/// when the minimizer has full support.
inline std::vector<double> kkt_minimizer(const gff2d::SegmentKernel& k) {
  const int n = k.n();
  Eigen::MatrixXd a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = k(i, j);
  Eigen::VectorXd x = a.llt().solve(Eigen::VectorXd::Ones(n));
  x /= x.sum();
  return std::vector<double>(x.data(), x.data() + n);
}

}  // namespace oracle
