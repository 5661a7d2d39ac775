#include "gff2d/green.hpp"

#include <Eigen/Sparse>
#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <map>
#include <numeric>
#include <tuple>

#include "fftw_util.hpp"
#include "gff2d/errors.hpp"

namespace gff2d {

void apply_operator(const WalkModel& m, const Window& w, std::span<const double> u,
                    std::span<double> out) {
  const std::size_t n = w.size();
  if (u.size() != n || out.size() != n) throw DomainError("apply_operator: size mismatch");
  const int s = w.side();
  const bool torus = w.kind() == WindowKind::torus;
  const double lam = m.total_rate, c = m.edge_conductance;
  for (int y = 0; y < s; ++y) {
    const double* row = u.data() + static_cast<std::size_t>(y) * s;
    const double* up = y + 1 < s ? row + s : (torus ? u.data() : nullptr);
    const double* dn = y > 0 ? row - s : (torus ? u.data() + static_cast<std::size_t>(s - 1) * s : nullptr);
    double* o = out.data() + static_cast<std::size_t>(y) * s;
    for (int x = 0; x < s; ++x) {
      double nb = 0;
      if (x + 1 < s) nb += row[x + 1];
      else if (torus) nb += row[0];
      if (x > 0) nb += row[x - 1];
      else if (torus) nb += row[s - 1];
      if (up) nb += up[x];
      if (dn) nb += dn[x];
      o[x] = lam * row[x] - c * nb;
    }
  }
}

// ---------------------------------------------------------------- spectral

struct SpectralSolver::Impl {
  int s;
  std::mutex mu;
  detail::FftwBuffer real;
  std::unique_ptr<detail::FftwBuffer> cplx;
  detail::FftwPlan fwd, inv;
  std::vector<double> inv_eig;  // 1 / (eigenvalue * normalisation) per mode
  Impl(int side, bool torus)
      : s(side), real(sizeof(double) * static_cast<std::size_t>(side) * side) {
    std::lock_guard<std::mutex> lk(detail::fftw_planner_mutex());
    if (torus) {
      cplx = std::make_unique<detail::FftwBuffer>(sizeof(fftw_complex) * static_cast<std::size_t>(side) * (side / 2 + 1));
      fwd = detail::FftwPlan(fftw_plan_dft_r2c_2d(s, s, real.as<double>(), cplx->as<fftw_complex>(), FFTW_ESTIMATE));
      inv = detail::FftwPlan(fftw_plan_dft_c2r_2d(s, s, cplx->as<fftw_complex>(), real.as<double>(), FFTW_ESTIMATE));
    } else {
      fwd = detail::FftwPlan(fftw_plan_r2r_2d(s, s, real.as<double>(), real.as<double>(), FFTW_RODFT00, FFTW_RODFT00, FFTW_ESTIMATE));
    }
    if (!fwd) throw ResourceError("SpectralSolver: FFTW planning failed");
  }
};

SpectralSolver::SpectralSolver(const WalkModel& m, const Window& w) : model_(m), window_(w) {
  const int s = w.side();
  const bool torus = w.kind() == WindowKind::torus;
  try {
    impl_ = std::make_unique<Impl>(s, torus);
  } catch (const std::bad_alloc&) {
    throw ResourceError("SpectralSolver: out of memory for side " + std::to_string(s));
  }
  if (torus) {
    const int h = s / 2 + 1;
    impl_->inv_eig.resize(static_cast<std::size_t>(s) * h);
    for (int ky = 0; ky < s; ++ky)
      for (int kx = 0; kx < h; ++kx)
        impl_->inv_eig[static_cast<std::size_t>(ky) * h + kx] = 1.0 / (symbol(kx, ky) * s * s);
  } else {
    const double norm = 4.0 * (s + 1) * (s + 1);
    impl_->inv_eig.resize(static_cast<std::size_t>(s) * s);
    for (int ky = 0; ky < s; ++ky)
      for (int kx = 0; kx < s; ++kx)
        impl_->inv_eig[static_cast<std::size_t>(ky) * s + kx] = 1.0 / (symbol(kx, ky) * norm);
  }
}

SpectralSolver::~SpectralSolver() = default;

double SpectralSolver::symbol(int k1, int k2) const {
  const int s = window_.side();
  const double lam = model_.total_rate, c = model_.edge_conductance;
  if (window_.kind() == WindowKind::torus)
    return lam - 2 * c * (std::cos(2 * M_PI * k1 / s) + std::cos(2 * M_PI * k2 / s));
  return lam - 2 * c * (std::cos(M_PI * (k1 + 1) / (s + 1)) + std::cos(M_PI * (k2 + 1) / (s + 1)));
}

void SpectralSolver::solve(std::span<const double> f, std::span<double> u) const {
  const std::size_t n = window_.size();
  if (f.size() != n || u.size() != n) throw DomainError("SpectralSolver::solve: size mismatch");
  std::lock_guard<std::mutex> lk(impl_->mu);
  double* r = impl_->real.as<double>();
  std::copy(f.begin(), f.end(), r);
  if (window_.kind() == WindowKind::torus) {
    fftw_execute(impl_->fwd.get());
    auto* c = impl_->cplx->as<fftw_complex>();
    const std::size_t m = impl_->inv_eig.size();
    for (std::size_t i = 0; i < m; ++i) {
      c[i][0] *= impl_->inv_eig[i];
      c[i][1] *= impl_->inv_eig[i];
    }
    fftw_execute(impl_->inv.get());
  } else {
    fftw_execute(impl_->fwd.get());
    for (std::size_t i = 0; i < n; ++i) r[i] *= impl_->inv_eig[i];
    fftw_execute(impl_->fwd.get());
  }
  std::copy(r, r + n, u.begin());
}

// ------------------------------------------------------------------- torus

TorusGreenTable::TorusGreenTable(const WalkModel& m, int side) : side_(side) {
  const Window w = Window::torus(side);
  SpectralSolver sol(m, w);
  std::vector<double> delta(w.size(), 0.0);
  delta[w.index({0, 0})] = 1;
  std::vector<double> g(w.size());
  sol.solve(delta, g);
  std::vector<double> q(w.size());
  apply_operator(m, w, g, q);
  double r = 0;
  for (std::size_t i = 0; i < q.size(); ++i) r += (q[i] - delta[i]) * (q[i] - delta[i]);
  residual_ = std::sqrt(r);
  if (residual_ > kSolveResidual) throw SolverError("TorusGreenTable: spectral solve inaccurate", residual_);
  // re-index so that table_[dy * side + dx] = g(dx, dy) with dx, dy in [0, side)
  table_.resize(w.size());
  for (int dy = 0; dy < side; ++dy)
    for (int dx = 0; dx < side; ++dx)
      table_[static_cast<std::size_t>(dy) * side + dx] = g[w.index({dx, dy})];
}

double TorusGreenTable::operator()(int dx, int dy) const {
  dx %= side_;
  dy %= side_;
  if (dx < 0) dx += side_;
  if (dy < 0) dy += side_;
  return table_[static_cast<std::size_t>(dy) * side_ + dx];
}

// ------------------------------------------------------------------- plane

PlaneGreen::PlaneGreen(const WalkModel& m) : model_(m) {}

double PlaneGreen::compute(int a, int b) const {
  // a <= b; g = (1/pi) int_0^pi cos(a k) rho(k)^b / sqrt(A^2 - 1/4) dk with
  // A = lambda - cos(k)/2 = 1/2 + delta. The substitution k = sqrt(kappa)
  // sinh(t) flattens the peak of width sqrt(kappa) at k = 0.
  const double kappa = model_.killing_rate;
  const double sk = std::sqrt(kappa);
  auto f = [a, b, kappa, sk](double t) {
    const double k = sk * std::sinh(t);
    const double sh = std::sin(0.5 * k);
    const double delta = kappa + sh * sh;
    const double root = std::sqrt(delta * (1 + delta));
    const double log_rho = -std::log1p(2 * delta + 2 * root);
    return std::cos(a * k) * std::exp(b * log_rho) / root * sk * std::cosh(t);
  };
  using GK = boost::math::quadrature::gauss_kronrod<double, 31>;
  return GK::integrate(f, 0.0, std::asinh(M_PI / sk), 12, 1e-13) / M_PI;
}

double PlaneGreen::operator()(int dx, int dy) const {
  int a = std::abs(dx), b = std::abs(dy);
  if (a > b) std::swap(a, b);
  const long long key = (static_cast<long long>(a) << 32) | static_cast<unsigned>(b);
  {
    std::lock_guard<std::mutex> lk(mu_);
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
  }
  const double v = compute(a, b);
  std::lock_guard<std::mutex> lk(mu_);
  cache_.emplace(key, v);
  return v;
}

std::shared_ptr<const PlaneGreen> plane_green(int N) {
  static std::mutex mu;
  static std::map<int, std::shared_ptr<const PlaneGreen>> cache;
  std::lock_guard<std::mutex> lk(mu);
  auto& p = cache[N];
  if (!p) p = std::make_shared<PlaneGreen>(WalkModel(N));
  return p;
}

std::shared_ptr<const TorusGreenTable> torus_green(const WalkModel& m, int side) {
  static std::mutex mu;
  static std::map<std::pair<int, int>, std::shared_ptr<const TorusGreenTable>> cache;
  std::lock_guard<std::mutex> lk(mu);
  auto& p = cache[{m.N, side}];
  if (!p) {
    if (cache.size() > 4) {
      for (auto it = cache.begin(); it != cache.end();)
        it = (it->second && it->second.use_count() == 1) ? cache.erase(it) : std::next(it);
    }
    p = std::make_shared<TorusGreenTable>(m, side);
  }
  return p;
}

std::string to_string(SolverMethod s) {
  switch (s) {
    case SolverMethod::spectral: return "spectral";
    case SolverMethod::direct: return "direct";
    case SolverMethod::pcg: return "pcg";
  }
  return "?";
}

// --------------------------------------------------------------- dirichlet

namespace {

// b = f on free sites plus the coupling to pinned neighbours.
std::vector<double> reduced_rhs(const WalkModel& m, const Window& w, const std::vector<char>& pinned,
                                std::span<const double> f, std::span<const double> pv) {
  const std::size_t n = w.size();
  std::vector<double> b(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (pinned[i]) continue;
    double v = f.empty() ? 0.0 : f[i];
    if (!pv.empty())
      for (int d = 0; d < 4; ++d) {
        const std::size_t j = w.neighbor(i, d);
        if (j != Window::npos && pinned[j]) v += m.edge_conductance * pv[j];
      }
    b[i] = v;
  }
  return b;
}

}  // namespace

double dirichlet_residual(const WalkModel& m, const Window& w, const std::vector<char>& pinned,
                          std::span<const double> u, std::span<const double> f) {
  const std::size_t n = w.size();
  std::vector<double> qu(n);
  apply_operator(m, w, u, qu);
  const auto b = reduced_rhs(m, w, pinned, f, u);
  double num = 0, den = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (pinned[i]) continue;
    const double r = qu[i] - (f.empty() ? 0.0 : f[i]);
    num += r * r;
    den += b[i] * b[i];
  }
  if (den == 0) return std::sqrt(num);
  return std::sqrt(num / den);
}

struct DirichletSolver::Impl {
  WalkModel model;
  Window window;
  std::vector<char> pinned;
  SolverOptions opt;
  std::vector<std::ptrdiff_t> pos;  // window index -> free position or -1
  std::vector<std::size_t> free_sites;
  SolverMethod method;
  std::unique_ptr<Eigen::SimplicialLLT<Eigen::SparseMatrix<double>>> llt;
  std::unique_ptr<SpectralSolver> spectral;
  Impl(const WalkModel& m, const Window& w, std::vector<char> p, SolverOptions o)
      : model(m), window(w), pinned(std::move(p)), opt(o), method(SolverMethod::direct) {}
};

DirichletSolver::DirichletSolver(const WalkModel& m, const Window& w, std::vector<char> pinned,
                                 SolverOptions opt)
    : impl_(std::make_unique<Impl>(m, w, std::move(pinned), opt)) {
  auto& I = *impl_;
  const std::size_t n = w.size();
  if (I.pinned.empty()) I.pinned.assign(n, 0);
  if (I.pinned.size() != n) throw DomainError("DirichletSolver: mask size differs from window");
  I.pos.assign(n, -1);
  for (std::size_t i = 0; i < n; ++i)
    if (!I.pinned[i]) {
      I.pos[i] = static_cast<std::ptrdiff_t>(I.free_sites.size());
      I.free_sites.push_back(i);
    }
  const std::size_t nf = I.free_sites.size();
  const bool nothing_pinned = nf == n;
  if (nothing_pinned && !opt.force_iterative) {
    I.method = SolverMethod::spectral;
    I.spectral = std::make_unique<SpectralSolver>(m, w);
  } else if (nf <= opt.direct_limit && !opt.force_iterative) {
    I.method = SolverMethod::direct;
    std::vector<Eigen::Triplet<double>> t;
    t.reserve(nf * 3);
    for (std::size_t k = 0; k < nf; ++k) {
      const std::size_t i = I.free_sites[k];
      t.emplace_back(k, k, m.total_rate);
      for (int d = 0; d < 4; ++d) {
        const std::size_t j = w.neighbor(i, d);
        if (j == Window::npos || I.pinned[j]) continue;
        const auto kj = static_cast<std::size_t>(I.pos[j]);
        if (kj < k) t.emplace_back(k, kj, -m.edge_conductance);
      }
    }
    Eigen::SparseMatrix<double> q(nf, nf);
    q.setFromTriplets(t.begin(), t.end());  // duplicates (tiny tori) are summed
    try {
      I.llt = std::make_unique<Eigen::SimplicialLLT<Eigen::SparseMatrix<double>>>();
      I.llt->compute(q);
    } catch (const std::bad_alloc&) {
      throw ResourceError("DirichletSolver: factorization out of memory");
    }
    if (I.llt->info() != Eigen::Success) throw SolverError("DirichletSolver: factorization failed", INFINITY);
  } else {
    I.method = SolverMethod::pcg;
    I.spectral = std::make_unique<SpectralSolver>(m, w);
  }
}

DirichletSolver::~DirichletSolver() = default;
DirichletSolver::DirichletSolver(DirichletSolver&&) noexcept = default;

SolverMethod DirichletSolver::method() const { return impl_->method; }
std::size_t DirichletSolver::free_count() const { return impl_->free_sites.size(); }
const std::vector<char>& DirichletSolver::pinned() const { return impl_->pinned; }

DirichletResult DirichletSolver::solve(std::span<const double> source,
                                       std::span<const double> pinned_values) const {
  const auto& I = *impl_;
  const WalkModel& m = I.model;
  const Window& w = I.window;
  const std::size_t n = w.size();
  if ((!source.empty() && source.size() != n) || (!pinned_values.empty() && pinned_values.size() != n))
    throw DomainError("DirichletSolver::solve: size mismatch");
  const auto b = reduced_rhs(m, w, I.pinned, source, pinned_values);
  DirichletResult out;
  out.method = I.method;
  out.u.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    if (I.pinned[i] && !pinned_values.empty()) out.u[i] = pinned_values[i];

  if (I.method == SolverMethod::spectral) {
    I.spectral->solve(b, out.u);
    out.iterations = 1;
  } else if (I.method == SolverMethod::direct) {
    const std::size_t nf = I.free_sites.size();
    Eigen::VectorXd rhs(nf);
    for (std::size_t k = 0; k < nf; ++k) rhs[k] = b[I.free_sites[k]];
    Eigen::VectorXd x = I.llt->solve(rhs);
    for (std::size_t k = 0; k < nf; ++k) out.u[I.free_sites[k]] = x[k];
    out.iterations = 1;
  } else {
    // PCG on the free sites; the preconditioner is the whole-window inverse
    // restricted to them, which differs from the exact inverse by a
    // correction of rank at most the size of the pinned boundary.
    std::vector<double> x(n, 0.0), r = b, z(n), p(n), qp(n), tmp(n);
    auto project = [&](std::vector<double>& v) {
      for (std::size_t i = 0; i < n; ++i)
        if (I.pinned[i]) v[i] = 0;
    };
    auto precond = [&](const std::vector<double>& in, std::vector<double>& o) {
      I.spectral->solve(in, o);
      project(o);
    };
    auto apply_ff = [&](const std::vector<double>& in, std::vector<double>& o) {
      apply_operator(m, w, in, o);
      project(o);
    };
    const double bnorm = std::sqrt(std::inner_product(b.begin(), b.end(), b.begin(), 0.0));
    if (bnorm > 0) {
      precond(r, z);
      p = z;
      double rz = std::inner_product(r.begin(), r.end(), z.begin(), 0.0);
      int it = 0;
      for (; it < I.opt.max_iterations; ++it) {
        apply_ff(p, qp);
        const double alpha = rz / std::inner_product(p.begin(), p.end(), qp.begin(), 0.0);
        for (std::size_t i = 0; i < n; ++i) {
          x[i] += alpha * p[i];
          r[i] -= alpha * qp[i];
        }
        const double rn = std::sqrt(std::inner_product(r.begin(), r.end(), r.begin(), 0.0));
        if (rn <= I.opt.tolerance * bnorm) {
          ++it;
          break;
        }
        precond(r, z);
        const double rz2 = std::inner_product(r.begin(), r.end(), z.begin(), 0.0);
        const double beta = rz2 / rz;
        rz = rz2;
        for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
      }
      out.iterations = it;
    }
    for (std::size_t i = 0; i < n; ++i)
      if (!I.pinned[i]) out.u[i] = x[i];
  }
  out.residual = dirichlet_residual(m, w, I.pinned, out.u, source);
  if (!(out.residual <= kSolveResidual))
    throw SolverError("DirichletSolver: residual above contract", out.residual);
  return out;
}

// ---------------------------------------------------------- point queries

namespace {
struct ColumnKey {
  int N, side, cx, cy, kind, y0, y1;
  auto operator<=>(const ColumnKey&) const = default;
};
}  // namespace

std::vector<double> green_column(const WalkModel& m, const Window& w, Point y, double* residual) {
  if (w.kind() == WindowKind::box && !w.inside(y)) throw DomainError("green: point outside window");
  std::vector<double> f(w.size(), 0.0);
  f[w.index(y)] = 1;
  DirichletSolver s(m, w, {});
  auto r = s.solve(f, {});
  if (residual) *residual = r.residual;
  return std::move(r.u);
}

double green(const WalkModel& m, const Window& w, Point x, Point y) {
  const bool box = w.kind() == WindowKind::box;
  if (box && (!w.inside(x) || !w.inside(y))) throw DomainError("green: point outside window");
  if (!box) {
    auto t = torus_green(m, w.side());
    return (*t)(x.x - y.x, x.y - y.y);
  }
  static std::mutex mu;
  static std::map<ColumnKey, std::shared_ptr<const std::vector<double>>> cache;
  const ColumnKey key{m.N, w.side(), w.center().x, w.center().y, 0, y.x, y.y};
  std::shared_ptr<const std::vector<double>> col;
  {
    std::lock_guard<std::mutex> lk(mu);
    auto it = cache.find(key);
    if (it != cache.end()) col = it->second;
  }
  if (!col) {
    col = std::make_shared<const std::vector<double>>(green_column(m, w, y));
    std::lock_guard<std::mutex> lk(mu);
    if (cache.size() >= 16) cache.clear();
    cache[key] = col;
  }
  return (*col)[w.index(x)];
}

std::vector<double> green_killed_column(const WalkModel& m, const Window& w, const PointSet& U,
                                        Point y, double* residual) {
  if (contains(U, y)) throw DomainError("green_killed: point lies in U");
  if (w.kind() == WindowKind::box && !w.inside(y)) throw DomainError("green_killed: point outside window");
  if (U.empty()) return green_column(m, w, y, residual);
  std::vector<char> mask(w.size(), 0);
  for (Point p : U)
    if (w.kind() == WindowKind::torus || w.inside(p)) mask[w.index(p)] = 1;
  std::vector<double> f(w.size(), 0.0);
  f[w.index(y)] = 1;
  DirichletSolver s(m, w, std::move(mask));
  auto r = s.solve(f, {});
  if (residual) *residual = r.residual;
  return std::move(r.u);
}

double green_killed(const WalkModel& m, const Window& w, const PointSet& U, Point x, Point y) {
  if (contains(U, x)) throw DomainError("green_killed: point lies in U");
  if (w.kind() == WindowKind::box && !w.inside(x)) throw DomainError("green_killed: point outside window");
  return green_killed_column(m, w, U, y)[w.index(x)];
}

}  // namespace gff2d
