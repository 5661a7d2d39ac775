#pragma once

namespace gff2d::bessel {

struct BesselEval {
  double value;
  double abs_error_bound;
};

inline constexpr double kTolerance = 1e-10;

/// Modified Bessel function of the second kind, order 0.
BesselEval k0(double s);
/// Modified Bessel function of the second kind, order 1.
BesselEval k1(double s);

/// K0 via adaptive quadrature of its integral representation
/// int_0^inf (1/2t) exp(-s^2/4t - t) dt. Slow; used for validation.
double k0_quadrature(double s);
/// K1 via quadrature of int_0^inf (s/4t^2) exp(-s^2/4t - t) dt.
double k1_quadrature(double s);

/// Integral of K0(s) over s in [0, b] (finite despite the log singularity).
double k0_integral(double b);
/// Integral of s*K0(s) over [0, b].
double k0_moment_integral(double b);

}  // namespace gff2d::bessel
