#include "gff2d/potential.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "gff2d/errors.hpp"

namespace gff2d {

namespace {
void check_sets(const Window& w, const PointSet& K, const PointSet& U) {
  if (K.empty()) throw ValidationError("K must be nonempty");
  for (Point p : K) {
    if (contains(U, p)) throw ValidationError("K and U overlap");
    if (w.kind() == WindowKind::box && !w.inside(p)) throw DomainError("K leaves the window");
  }
}
}  // namespace

std::vector<double> hitting_probability(const WalkModel& m, const Window& w, const PointSet& K,
                                        const PointSet& U, double* residual) {
  check_sets(w, K, U);
  std::vector<char> mask(w.size(), 0);
  std::vector<double> vals(w.size(), 0.0);
  for (Point p : U)
    if (w.kind() == WindowKind::torus || w.inside(p)) mask[w.index(p)] = 1;
  for (Point p : K) {
    mask[w.index(p)] = 1;
    vals[w.index(p)] = 1;
  }
  DirichletSolver s(m, w, std::move(mask));
  auto r = s.solve({}, vals);
  if (residual) *residual = r.residual;
  return std::move(r.u);
}

EquilibriumMeasure equilibrium_measure(const WalkModel& m, const Window& w, const PointSet& K,
                                       const PointSet& U) {
  EquilibriumMeasure e;
  const auto h = hitting_probability(m, w, K, U, &e.residual);
  e.support = K;
  e.weights.resize(K.size());
  for (std::size_t k = 0; k < K.size(); ++k) {
    const std::size_t i = w.index(K[k]);
    double esc = m.killing_rate;
    for (int d = 0; d < 4; ++d) {
      const std::size_t j = w.neighbor(i, d);
      esc += m.edge_conductance * (1 - (j == Window::npos ? 0.0 : h[j]));
    }
    e.weights[k] = esc;
    e.cap += esc;
  }
  if (!U.empty()) e.killing_set = U;
  return e;
}

EquilibriumMeasure equilibrium_measure(const WalkModel& m, const GreenKernel& g, const PointSet& K) {
  if (K.empty()) throw ValidationError("K must be nonempty");
  const PointSet bd = inner_boundary(K);
  PointSet interior;
  std::set_difference(K.begin(), K.end(), bd.begin(), bd.end(), std::back_inserter(interior));
  const std::size_t nb = bd.size();
  if (nb > 20000) throw ResourceError("equilibrium_measure: boundary too large for dense solve");
  Eigen::MatrixXd G(nb, nb);
  for (std::size_t i = 0; i < nb; ++i)
    for (std::size_t j = 0; j <= i; ++j) G(i, j) = G(j, i) = g(bd[i].x - bd[j].x, bd[i].y - bd[j].y);
  Eigen::VectorXd rhs = Eigen::VectorXd::Ones(nb);
  if (!interior.empty())
    for (std::size_t i = 0; i < nb; ++i) {
      double s = 0;
      for (Point q : interior) s += g(bd[i].x - q.x, bd[i].y - q.y);
      rhs[i] -= m.killing_rate * s;
    }
  Eigen::LLT<Eigen::MatrixXd> llt(G);
  if (llt.info() != Eigen::Success) throw SolverError("equilibrium_measure: Green matrix not positive definite", INFINITY);
  Eigen::VectorXd x = llt.solve(rhs);
  EquilibriumMeasure e;
  e.residual = (G * x - rhs).norm() / rhs.norm();
  if (!(e.residual <= kSolveResidual)) throw SolverError("equilibrium_measure: dense solve inaccurate", e.residual);
  e.support = K;
  e.weights.assign(K.size(), m.killing_rate);
  for (std::size_t i = 0; i < nb; ++i) {
    const auto it = std::lower_bound(K.begin(), K.end(), bd[i]);
    e.weights[static_cast<std::size_t>(it - K.begin())] = x[i];
  }
  for (double v : e.weights) e.cap += v;
  return e;
}

double plane_capacity(int N, const PointSet& K) {
  auto g = plane_green(N);
  return equilibrium_measure(g->model(), [&g](int dx, int dy) { return (*g)(dx, dy); }, K).cap;
}

double green_energy(const GreenKernel& g, const PointSet& K, const std::vector<double>& mu) {
  if (mu.size() != K.size()) throw DomainError("green_energy: size mismatch");
  double s = 0;
  for (std::size_t i = 0; i < K.size(); ++i) {
    double r = 0;
    for (std::size_t j = 0; j < K.size(); ++j) r += g(K[i].x - K[j].x, K[i].y - K[j].y) * mu[j];
    s += mu[i] * r;
  }
  return s;
}

CorrelationScale correlation_scale(double a, int N, const Window& w) {
  if (!(a > -1 && a < 1)) throw DomainError("correlation_scale: level must lie in (-1,1)");
  const WalkModel m(N);
  CorrelationScale c;
  c.a = a;
  c.N = N;
  c.g_N = green(m, w, w.center(), w.center());
  c.xi = N * std::exp(-a * a * c.g_N);
  c.abar = a * std::sqrt(c.g_N);
  return c;
}

}  // namespace gff2d
