#include "gff2d/continuum_capacity.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <cmath>
#include <complex>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <json.hpp>
#include <mutex>
#include <numeric>

#include "fftw_util.hpp"
#include "gff2d/bessel.hpp"
#include "gff2d/errors.hpp"

#ifndef GFF2D_DEFAULT_RESULTS_DIR
#define GFF2D_DEFAULT_RESULTS_DIR "results"
#endif

namespace gff2d {
namespace {

double kernel(double r) { return (2.0 / M_PI) * bessel::k0(2.0 * r).value; }

}  // namespace

double segment_kernel_cell_average(int n, int d) {
  if (n < 1 || d < 0 || d >= n) throw DomainError("segment_kernel_cell_average: bad index");
  const double h = 1.0 / n;
  if (d == 0) {
    // (2/h^2) int_0^h (h-t) f(t) dt with s = 2t
    const double b = 2 * h;
    const double i0 = bessel::k0_integral(b);
    const double i1 = bessel::k0_moment_integral(b);
    return (2.0 / (h * h)) * (2.0 / M_PI) * (0.5 * h * i0 - 0.25 * i1);
  }
  auto f = [h, d](double t) {
    const double r = d * h + t;
    return r > 0 ? (h - std::abs(t)) * kernel(r) : 0.0;
  };
  double v;
  if (d <= 2) {
    boost::math::quadrature::tanh_sinh<double> ts;
    v = ts.integrate(f, -h, 0.0, 1e-14) + ts.integrate(f, 0.0, h, 1e-14);
  } else {
    using GK = boost::math::quadrature::gauss_kronrod<double, 21>;
    v = GK::integrate(f, -h, 0.0, 0) + GK::integrate(f, 0.0, h, 0);
  }
  return v / (h * h);
}

struct SegmentKernel::Fft {
  int m;  // circulant size 2n
  std::vector<std::complex<double>> symbol;
  mutable std::mutex mu;
  detail::FftwBuffer re, sp;
  detail::FftwPlan fwd, inv;
  explicit Fft(int n)
      : m(2 * n), re(sizeof(double) * 2 * n), sp(sizeof(fftw_complex) * (n + 1)) {
    std::lock_guard<std::mutex> lk(detail::fftw_planner_mutex());
    fwd = detail::FftwPlan(fftw_plan_dft_r2c_1d(m, re.as<double>(), sp.as<fftw_complex>(), FFTW_ESTIMATE));
    inv = detail::FftwPlan(fftw_plan_dft_c2r_1d(m, sp.as<fftw_complex>(), re.as<double>(), FFTW_ESTIMATE));
  }
};

SegmentKernel::SegmentKernel(int n) : n_(n) {
  if (n < 1) throw DomainError("SegmentKernel: n must be >= 1");
  diag_.resize(n);
  for (int d = 0; d < n; ++d) diag_[d] = segment_kernel_cell_average(n, d);
  fft_ = std::make_unique<Fft>(n);
  double* r = fft_->re.as<double>();
  std::fill(r, r + fft_->m, 0.0);
  for (int d = 0; d < n; ++d) r[d] = diag_[d];
  for (int d = 1; d < n; ++d) r[fft_->m - d] = diag_[d];
  fftw_execute(fft_->fwd.get());
  auto* c = fft_->sp.as<fftw_complex>();
  fft_->symbol.resize(n + 1);
  for (int k = 0; k <= n; ++k) fft_->symbol[k] = {c[k][0] / fft_->m, c[k][1] / fft_->m};
}

SegmentKernel::~SegmentKernel() = default;
SegmentKernel::SegmentKernel(SegmentKernel&&) noexcept = default;
SegmentKernel& SegmentKernel::operator=(SegmentKernel&&) noexcept = default;

void SegmentKernel::apply(std::span<const double> w, std::span<double> out) const {
  if (static_cast<int>(w.size()) != n_ || static_cast<int>(out.size()) != n_)
    throw DomainError("SegmentKernel::apply: size mismatch");
  std::lock_guard<std::mutex> lk(fft_->mu);
  double* r = fft_->re.as<double>();
  std::copy(w.begin(), w.end(), r);
  std::fill(r + n_, r + fft_->m, 0.0);
  fftw_execute(fft_->fwd.get());
  auto* c = fft_->sp.as<fftw_complex>();
  for (int k = 0; k <= n_; ++k) {
    const std::complex<double> z = std::complex<double>(c[k][0], c[k][1]) * fft_->symbol[k];
    c[k][0] = z.real();
    c[k][1] = z.imag();
  }
  fftw_execute(fft_->inv.get());
  std::copy(r, r + n_, out.begin());
}

double SegmentKernel::energy(std::span<const double> w) const {
  std::vector<double> aw(n_);
  apply(w, aw);
  return std::inner_product(w.begin(), w.end(), aw.begin(), 0.0);
}

namespace {
void validate_probability(std::span<const double> w, int n) {
  if (static_cast<int>(w.size()) != n) throw ValidationError("weights: length differs from n");
  double s = 0;
  for (double x : w) {
    if (!(x >= 0)) throw ValidationError("weights: negative or non-finite entry");
    s += x;
  }
  if (std::abs(s - 1) > 1e-12) throw ValidationError("weights: do not sum to 1");
}
}  // namespace

double segment_energy(const SegmentKernel& kernel, std::span<const double> weights) {
  validate_probability(weights, kernel.n());
  return kernel.energy(weights);
}

double segment_energy(std::span<const double> weights, int n) {
  validate_probability(weights, n);
  return SegmentKernel(n).energy(weights);
}

void project_simplex(std::span<double> v) {
  std::vector<double> u(v.begin(), v.end());
  std::sort(u.begin(), u.end(), std::greater<>());
  double cum = 0, theta = 0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    cum += u[i];
    const double t = (cum - 1) / static_cast<double>(i + 1);
    if (u[i] - t > 0) theta = t;
  }
  for (double& x : v) x = std::max(x - theta, 0.0);
}

SegmentDiscretization minimize_segment(int n, double tol, const MinimizeOptions& opt) {
  if (n < 2) throw DomainError("minimize_segment: n must be >= 2");
  return minimize_segment(SegmentKernel(n), tol, opt);
}

SegmentDiscretization minimize_segment(const SegmentKernel& A, double tol,
                                       const MinimizeOptions& opt) {
  const int n = A.n();
  if (n < 2) throw DomainError("minimize_segment: n must be >= 2");
  if (!(tol > 0)) throw DomainError("minimize_segment: tol must be positive");

  std::vector<double> x(n, 1.0 / n), y = x, z(n), ay(n), az(n), d(n), ad(n);
  // The objective is quadratic, so the descent test uses d'Ad directly and
  // restarts use the gradient criterion; both avoid differences of nearly
  // equal energies, which stall far above the target gap.
  double L = 0;
  {
    std::vector<double> v(n), av(n);
    for (int i = 0; i < n; ++i) v[i] = 1.0 + 0.5 * std::sin(0.7 * i);
    for (int k = 0; k < 50; ++k) {
      A.apply(v, av);
      const double nv = std::sqrt(std::inner_product(av.begin(), av.end(), av.begin(), 0.0));
      for (int i = 0; i < n; ++i) v[i] = av[i] / nv;
      L = 2 * nv;
    }
    L *= 1.02;
  }
  double t = 1;
  double gap = INFINITY;
  int it = 0;
  std::vector<double> best = x;
  double best_gap = INFINITY;

  for (; it < opt.max_iterations; ++it) {
    A.apply(y, ay);
    for (;;) {
      for (int i = 0; i < n; ++i) z[i] = y[i] - 2 * ay[i] / L;
      project_simplex(z);
      double sq = 0;
      for (int i = 0; i < n; ++i) {
        d[i] = z[i] - y[i];
        sq += d[i] * d[i];
      }
      A.apply(d, ad);
      const double curv = std::inner_product(d.begin(), d.end(), ad.begin(), 0.0);
      if (curv <= 0.5 * L * sq * (1 + 1e-12)) break;
      L *= 2;
    }
    A.apply(z, az);
    const double fz = std::inner_product(z.begin(), z.end(), az.begin(), 0.0);
    gap = 2 * (fz - *std::min_element(az.begin(), az.end()));
    if (opt.verbose && it % 500 == 0)
      std::fprintf(stderr, "it %d gap %.3e L %.3e f %.15f\n", it, gap, L, fz);
    if (gap < best_gap) {
      best_gap = gap;
      best = z;
    }
    if (gap <= tol) {
      x = z;
      break;
    }
    // restart when the momentum direction points uphill
    double uphill = 0;
    for (int i = 0; i < n; ++i) uphill += (y[i] - z[i]) * (z[i] - x[i]);
    const double tn = 0.5 * (1 + std::sqrt(1 + 4 * t * t));
    if (uphill > 0) {
      t = 1;
      y = z;
    } else {
      const double beta = (t - 1) / tn;
      for (int i = 0; i < n; ++i) y[i] = z[i] + beta * (z[i] - x[i]);
      t = tn;
    }
    x = z;
  }
  if (gap > tol)
    throw ConvergenceError("minimize_segment: iteration budget exhausted", best, best_gap, it);

  // Renormalise the returned simplex point so it sums to one in floating point.
  const double s = std::accumulate(x.begin(), x.end(), 0.0);
  for (double& v : x) v /= s;

  SegmentDiscretization out;
  out.n = n;
  out.nodes.resize(n);
  for (int i = 0; i < n; ++i) out.nodes[i] = (i + 0.5) / n;
  out.weights = std::move(x);
  out.energy = A.energy(out.weights);
  out.cap = 1 / out.energy;
  out.tau = out.cap / 2;
  out.iterations = it + 1;
  out.residual = gap;
  return out;
}

CapacityStudy segment_capacity_study(const std::vector<int>& ns, double tol) {
  if (ns.size() < 2) throw DomainError("segment_capacity_study: need at least two grids");
  CapacityStudy s;
  for (int n : ns) s.levels.push_back(minimize_segment(n, tol));
  const auto& lv = s.levels;
  const std::size_t k = lv.size();
  s.cap_finest = lv.back().cap;
  s.tau_finest = s.cap_finest / 2;
  s.cauchy_ok = std::abs(lv[k - 1].cap - lv[k - 2].cap) < 1e-3;
  if (k >= 3) {
    const double d1 = lv[k - 2].cap - lv[k - 3].cap, d2 = lv[k - 1].cap - lv[k - 2].cap;
    const double ratio = static_cast<double>(lv[k - 1].n) / lv[k - 2].n;
    double p = (d1 != 0 && d2 != 0 && d1 / d2 > 1) ? std::log(d1 / d2) / std::log(ratio) : 1.0;
    s.observed_order = p;
    const double f = std::pow(ratio, p) - 1;
    s.cap_extrapolated = lv[k - 1].cap + d2 / f;
    const double prev = lv[k - 2].cap + d1 / f;
    s.extrapolation_error = std::abs(s.cap_extrapolated - prev);
  } else {
    s.observed_order = 1;
    s.cap_extrapolated = 2 * lv[k - 1].cap - lv[k - 2].cap;
    s.extrapolation_error = std::abs(lv[k - 1].cap - lv[k - 2].cap);
  }
  return s;
}

namespace {
std::mutex store_mu;
std::filesystem::path store_override;
bool reference_loaded = false;
CapacityStudy reference_study;
}  // namespace

std::filesystem::path results_store_path() {
  std::lock_guard<std::mutex> lk(store_mu);
  if (!store_override.empty()) return store_override;
  if (const char* e = std::getenv("GFF2D_RESULTS_DIR"); e && *e)
    return std::filesystem::path(e) / "segment_capacity.json";
  return std::filesystem::path(GFF2D_DEFAULT_RESULTS_DIR) / "segment_capacity.json";
}

void set_results_store_path(const std::filesystem::path& p) {
  std::lock_guard<std::mutex> lk(store_mu);
  store_override = p;
  reference_loaded = false;
}

void save_capacity_study(const CapacityStudy& s, const std::filesystem::path& p) {
  nlohmann::json j;
  j["cap_finest"] = s.cap_finest;
  j["tau_finest"] = s.tau_finest;
  j["cap_extrapolated"] = s.cap_extrapolated;
  j["extrapolation_error"] = s.extrapolation_error;
  j["observed_order"] = s.observed_order;
  j["cauchy_ok"] = s.cauchy_ok;
  for (const auto& l : s.levels)
    j["history"].push_back({{"n", l.n}, {"cap", l.cap}, {"tau", l.tau}, {"energy", l.energy},
                            {"iterations", l.iterations}, {"residual", l.residual}});
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream f(p);
  f << j.dump(2) << "\n";
  if (!f) throw std::runtime_error("cannot write results store " + p.string());
}

bool load_capacity_study(const std::filesystem::path& p, CapacityStudy& out) {
  std::ifstream f(p);
  if (!f) return false;
  try {
    const auto j = nlohmann::json::parse(f);
    CapacityStudy s;
    s.cap_finest = j.at("cap_finest");
    s.tau_finest = j.at("tau_finest");
    s.cap_extrapolated = j.at("cap_extrapolated");
    s.extrapolation_error = j.at("extrapolation_error");
    s.observed_order = j.at("observed_order");
    s.cauchy_ok = j.at("cauchy_ok");
    for (const auto& h : j.at("history")) {
      SegmentDiscretization d;
      d.n = h.at("n");
      d.cap = h.at("cap");
      d.tau = h.at("tau");
      d.energy = h.at("energy");
      d.iterations = h.at("iterations");
      d.residual = h.at("residual");
      s.levels.push_back(std::move(d));
    }
    if (s.levels.empty() || !(s.cap_finest > 0)) return false;
    out = std::move(s);
    return true;
  } catch (const std::exception&) {
    return false;
  }
}

double cap_reference() {
  const auto p = results_store_path();
  std::lock_guard<std::mutex> lk(store_mu);
  if (!reference_loaded) {
    if (!load_capacity_study(p, reference_study)) {
      reference_study = segment_capacity_study();
      save_capacity_study(reference_study, p);
    }
    reference_loaded = true;
  }
  return reference_study.cap_finest;
}

double tau_reference() { return cap_reference() / 2; }

}  // namespace gff2d
