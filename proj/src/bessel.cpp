#include "gff2d/bessel.hpp"

#include <boost/math/quadrature/tanh_sinh.hpp>
#include <cmath>
#include <limits>

#include "gff2d/errors.hpp"

namespace gff2d::bessel {
namespace {

constexpr double kEuler = 0.57721566490153286061;
constexpr double kEps = std::numeric_limits<double>::epsilon();
constexpr double kCrossover = 9.0;

void check_arg(double s, const char* fn) {
  if (!(s > 0) || !std::isfinite(s)) throw DomainError(std::string(fn) + ": argument must be positive and finite");
}

// Ascending series around 0; I0/I1 are summed alongside.
BesselEval k0_series(double x) {
  const double q = 0.25 * x * x;
  const double lg = std::log(0.5 * x) + kEuler;
  double t = 1.0, harmonic = 0.0, i0 = 0.0, s = 0.0, mag = 0.0;
  for (int k = 0; k < 200; ++k) {
    if (k > 0) {
      t *= q / (static_cast<double>(k) * k);
      harmonic += 1.0 / k;
    }
    i0 += t;
    s += harmonic * t;
    mag += t * (std::abs(lg) + harmonic);
    if (k > 2 && t * (std::abs(lg) + harmonic + 1) < 1e-18 * (i0 + s)) break;
  }
  const double v = -lg * i0 + s;
  return {v, 16 * kEps * mag + 1e-16};
}

BesselEval k1_series(double x) {
  const double q = 0.25 * x * x;
  const double lg = std::log(0.5 * x);
  // I1 = (x/2) sum q^k/(k!(k+1)!),  psi(k+1)+psi(k+2) = 2 H_k + 1/(k+1) - 2 gamma
  double t = 1.0, harmonic = 0.0, i1 = 0.0, s = 0.0, mag = 0.0;
  for (int k = 0; k < 200; ++k) {
    if (k > 0) {
      t *= q / (static_cast<double>(k) * (k + 1));
      harmonic += 1.0 / k;
    }
    const double psi = 2 * harmonic + 1.0 / (k + 1) - 2 * kEuler;
    i1 += t;
    s += psi * t;
    mag += t * (std::abs(lg) + std::abs(psi));
    if (k > 2 && t * (std::abs(psi) + std::abs(lg) + 1) < 1e-18 * (i1 + std::abs(s))) break;
  }
  const double half = 0.5 * x;
  const double v = 1.0 / x + lg * half * i1 - 0.5 * half * s;
  return {v, 16 * kEps * (1.0 / x + half * mag) + 1e-16};
}

BesselEval k_asymptotic(double x, int order) {
  const double mu = 4.0 * order * order;
  const double pref = std::sqrt(M_PI / (2 * x)) * std::exp(-x);
  double term = 1.0, sum = 1.0, mag = 1.0;
  double last = 1.0;
  for (int k = 1; k < 60; ++k) {
    const double next = term * (mu - (2.0 * k - 1) * (2.0 * k - 1)) / (8.0 * k * x);
    if (std::abs(next) >= std::abs(term)) break;  // past the smallest term
    term = next;
    sum += term;
    mag += std::abs(term);
    last = std::abs(term);
    if (last < 1e-17) break;
  }
  return {pref * sum, pref * (last + 8 * kEps * mag)};
}

}  // namespace

BesselEval k0(double s) {
  check_arg(s, "k0");
  return s <= kCrossover ? k0_series(s) : k_asymptotic(s, 0);
}

BesselEval k1(double s) {
  check_arg(s, "k1");
  return s <= kCrossover ? k1_series(s) : k_asymptotic(s, 1);
}

namespace {
// Substituting t = e^v gives a smooth, doubly exponentially decaying
// integrand on the real line; the window is chosen where it exceeds 1e-300.
template <class F>
double log_domain_integral(double s, F f) {
  const double ls = std::log(s / 2);
  const double lo = std::min(2 * ls, ls) - 8;
  const double hi = std::log(s / 2 + 800) + 1;
  boost::math::quadrature::tanh_sinh<double> ts;
  return ts.integrate(f, lo, hi, 1e-15);
}
}  // namespace

double k0_quadrature(double s) {
  check_arg(s, "k0_quadrature");
  auto f = [s](double v) {
    const double t = std::exp(v);
    return 0.5 * std::exp(-s * s / (4 * t) - t);
  };
  return log_domain_integral(s, f);
}

double k1_quadrature(double s) {
  check_arg(s, "k1_quadrature");
  auto f = [s](double v) {
    const double t = std::exp(v);
    return s / (4 * t) * std::exp(-s * s / (4 * t) - t);
  };
  return log_domain_integral(s, f);
}

double k0_integral(double b) {
  if (!(b >= 0)) throw DomainError("k0_integral: negative bound");
  if (b == 0) return 0;
  boost::math::quadrature::tanh_sinh<double> ts;
  return ts.integrate([](double s) { return s > 0 ? k0(s).value : 0.0; }, 0.0, b, 1e-14);
}

double k0_moment_integral(double b) {
  if (!(b >= 0)) throw DomainError("k0_moment_integral: negative bound");
  if (b == 0) return 0;
  // int_0^b s K0(s) ds = 1 - b K1(b)
  return 1.0 - b * k1(b).value;
}

}  // namespace gff2d::bessel
