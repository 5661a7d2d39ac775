#include <doctest.h>

#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>
#include <random>

#include "gff2d/errors.hpp"
#include "gff2d/green.hpp"
#include "gff2d/potential.hpp"
#include "oracles/dense_green.hpp"

using namespace gff2d;

TEST_CASE("walk model rates") {
  const WalkModel m(16);
  CHECK(m.edge_conductance == 0.25);
  CHECK(m.killing_rate == 1.0 / 256);
  CHECK(m.total_rate == m.killing_rate + 4 * m.edge_conductance);
  CHECK_THROWS_AS(WalkModel(0), DomainError);
}

TEST_CASE("window indexing") {
  const Window b = Window::box(10, {3, -2});
  CHECK(b.lower_left() == Point{-2, -7});
  for (std::size_t i = 0; i < b.size(); ++i) CHECK(b.index(b.point(i)) == i);
  CHECK(b.neighbor(0, 1) == Window::npos);
  CHECK(b.neighbor(0, 0) == 1);
  const Window t = Window::torus(8);
  CHECK(t.neighbor(0, 1) == 7);
  CHECK(t.neighbor(0, 3) == 56);
  CHECK(t.index({4, 4}) == t.index({-4, -4}));
  CHECK_THROWS_AS(Window::box(3), DomainError);
  CHECK_THROWS_AS(b.index({100, 0}), DomainError);
}

TEST_CASE("spectral solver inverts the operator") {
  for (auto w : {Window::box(13, {1, 1}), Window::torus(12)}) {
    const WalkModel m(5);
    const auto g = oracle::dense_green(m, w);
    SpectralSolver s(m, w);
    std::vector<double> f(w.size(), 0.0), u(w.size());
    f[17] = 1;
    f[40] = -0.5;
    s.solve(f, u);
    for (std::size_t i = 0; i < w.size(); ++i) CHECK(u[i] == doctest::Approx(g(i, 17) - 0.5 * g(i, 40)).epsilon(1e-12));
  }
}

TEST_CASE("green: symmetry and oracles") {
  const WalkModel m(16);
  const Window w = Window::box(32);
  const auto g = oracle::dense_green(m, w);
  std::mt19937 rng(1);
  std::uniform_int_distribution<int> c(-16, 15);
  for (int t = 0; t < 20; ++t) {
    const Point x{c(rng), c(rng)}, y{c(rng), c(rng)};
    const double gxy = green(m, w, x, y);
    CHECK(std::abs(gxy - green(m, w, y, x)) <= 1e-10);
    CHECK(std::abs(gxy - g(w.index(x), w.index(y))) <= 1e-8);
  }
  CHECK_THROWS_AS(green(m, w, {40, 0}, {0, 0}), DomainError);
}

TEST_CASE("green at the center of a 128 box agrees with two independent oracles") {
  const WalkModel m(16);
  const Window w = Window::box(128);
  const double g00 = green(m, w, {0, 0}, {0, 0});
  CHECK(std::abs(g00 - oracle::box_green_eigensum(m, 128, 64, 64, 64, 64)) <= 1e-8);
  SolverOptions o;
  o.direct_limit = 1 << 20;
  // a single pinned corner forces the sparse Cholesky path
  std::vector<char> mask(w.size(), 0);
  mask[0] = 1;
  DirichletSolver sparse(m, w, mask, o);
  CHECK(sparse.method() == SolverMethod::direct);
  std::vector<double> f(w.size(), 0.0);
  f[w.index({0, 0})] = 1;
  const auto r = sparse.solve(f, {});
  // pinning a corner changes g(0,0) by far less than 1e-8 (distance 90 at N = 16)
  CHECK(std::abs(r.u[w.index({0, 0})] - g00) <= 1e-8);
}

TEST_CASE("plane green agrees with a large torus") {
  const WalkModel m(8);
  const PlaneGreen pg(m);
  const TorusGreenTable tg(m, 256);
  for (Point d : {Point{0, 0}, Point{1, 0}, Point{3, 2}, Point{0, 17}, Point{-11, 5}, Point{30, 30}})
    CHECK(std::abs(pg(d.x, d.y) - tg(d.x, d.y)) <= 1e-10);
  CHECK(pg(3, 5) == pg(-5, 3));
}

TEST_CASE("dirichlet solver: direct, pcg and dense agree") {
  const WalkModel m(6);
  const Window w = Window::box(24);
  std::vector<char> mask(w.size(), 0);
  for (Point p : ball({2, 1}, 3.5)) mask[w.index(p)] = 1;
  const auto g = oracle::dense_green(m, w, mask);
  std::vector<double> f(w.size(), 0.0);
  f[w.index({-7, -7})] = 1;
  f[w.index({9, 3})] = 2;
  DirichletSolver direct(m, w, mask);
  SolverOptions o;
  o.force_iterative = true;
  DirichletSolver pcg(m, w, mask, o);
  CHECK(pcg.method() == SolverMethod::pcg);
  const auto a = direct.solve(f, {}), b = pcg.solve(f, {});
  CHECK(a.residual <= 1e-10);
  CHECK(b.residual <= 1e-10);
  // preconditioned iterations are bounded by the pinned boundary size
  CHECK(b.iterations <= 60);
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double ref = g(i, w.index({-7, -7})) + 2 * g(i, w.index({9, 3}));
    CHECK(std::abs(a.u[i] - ref) <= 1e-10);
    CHECK(std::abs(b.u[i] - ref) <= 1e-9);
  }
}

TEST_CASE("green_killed") {
  const WalkModel m(10);
  const Window w = Window::box(20);
  CHECK(green_killed(m, w, {}, {1, 2}, {3, -4}) == doctest::Approx(green(m, w, {1, 2}, {3, -4})).epsilon(1e-12));
  const PointSet U = box_set({0, 0}, 1);
  std::vector<char> mask(w.size(), 0);
  for (Point p : U) mask[w.index(p)] = 1;
  const auto g = oracle::dense_green(m, w, mask);
  for (Point x : {Point{3, 3}, Point{-5, 2}, Point{8, -9}})
    CHECK(std::abs(green_killed(m, w, U, x, {4, -1}) - g(w.index(x), w.index({4, -1}))) <= 1e-8);
  CHECK_THROWS_AS(green_killed(m, w, U, {0, 0}, {4, 4}), DomainError);
}

TEST_CASE("operator is positive definite") {
  const WalkModel m(4);
  const Window w = Window::box(16);
  std::mt19937 rng(5);
  std::normal_distribution<double> nd;
  for (int t = 0; t < 20; ++t) {
    std::vector<double> v(w.size()), q(w.size());
    for (double& x : v) x = nd(rng);
    apply_operator(m, w, v, q);
    double s = 0;
    for (std::size_t i = 0; i < v.size(); ++i) s += v[i] * q[i];
    CHECK(s > 0);
  }
}

TEST_CASE("hitting probability and equilibrium identities") {
  const WalkModel m(16);
  const Window w = Window::box(64);
  const PointSet K = make_point_set({{0, 0}, {1, 0}, {2, 0}, {2, 1}, {-5, 4}, {7, -3}});
  double res = 0;
  const auto h = hitting_probability(m, w, K, {}, &res);
  CHECK(res <= 1e-10);
  for (Point p : K) CHECK(h[w.index(p)] == 1.0);
  for (double v : h) {
    CHECK(v >= 0);
    CHECK(v <= 1 + 1e-15);
  }
  const auto e = equilibrium_measure(m, w, K);
  double sum = 0;
  for (double v : e.weights) sum += v;
  CHECK(std::abs(sum - e.cap) <= 1e-12);
  // last-exit: h = G e
  std::vector<std::vector<double>> cols;
  for (Point p : K) cols.push_back(green_column(m, w, p));
  double worst = 0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    double s = 0;
    for (std::size_t k = 0; k < K.size(); ++k) s += cols[k][i] * e.weights[k];
    worst = std::max(worst, std::abs(s - h[i]));
  }
  CHECK(worst <= 1e-8);
  // variational identity with the normalised measure
  double quad = 0;
  for (std::size_t a = 0; a < K.size(); ++a)
    for (std::size_t b = 0; b < K.size(); ++b) quad += e.weights[a] * e.weights[b] * cols[b][w.index(K[a])];
  CHECK(std::abs(e.cap * (quad / (e.cap * e.cap)) - 1) <= 1e-8);
}

TEST_CASE("capacity of a point") {
  const WalkModel m(16);
  const Window w = Window::box(64);
  const auto e = equilibrium_measure(m, w, {{0, 0}});
  CHECK(std::abs(e.cap * green(m, w, {0, 0}, {0, 0}) - 1) <= 1e-8);
  CHECK(plane_capacity(16, {{0, 0}}) * (*plane_green(16))(0, 0) == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("capacity is monotone on nested sets") {
  const WalkModel m(8);
  const Window w = Window::box(32);
  std::mt19937 rng(7);
  std::uniform_int_distribution<int> c(-6, 6);
  for (int t = 0; t < 50; ++t) {
    std::vector<Point> a, b;
    for (int i = 0; i < 5; ++i) a.push_back({c(rng), c(rng)});
    b = a;
    for (int i = 0; i < 4; ++i) b.push_back({c(rng), c(rng)});
    const double ca = equilibrium_measure(m, w, make_point_set(a)).cap;
    const double cb = equilibrium_measure(m, w, make_point_set(b)).cap;
    CHECK(ca <= cb + 1e-12);
  }
}

TEST_CASE("kernel-based equilibrium measure matches the Dirichlet route on a torus") {
  const WalkModel m(6);
  const int side = 40;
  const Window w = Window::torus(side);
  const auto tg = torus_green(m, side);
  const PointSet K = set_union(box_set({0, 0}, 3), make_point_set({{8, 1}, {9, 1}, {-10, 5}}));
  const auto a = equilibrium_measure(m, w, K);
  const auto b = equilibrium_measure(m, [&](int dx, int dy) { return (*tg)(dx, dy); }, K);
  CHECK(std::abs(a.cap - b.cap) <= 1e-10);
  for (std::size_t i = 0; i < K.size(); ++i) CHECK(std::abs(a.weights[i] - b.weights[i]) <= 1e-10);
  // interior sites carry the killing rate
  CHECK(a.weights[std::lower_bound(K.begin(), K.end(), Point{0, 0}) - K.begin()] == doctest::Approx(m.killing_rate));
}

TEST_CASE("validation of K and U") {
  const WalkModel m(8);
  const Window w = Window::box(16);
  CHECK_THROWS_AS(hitting_probability(m, w, {}, {}), ValidationError);
  CHECK_THROWS_AS(hitting_probability(m, w, {{0, 0}}, {{0, 0}}), ValidationError);
  CHECK_THROWS_AS(equilibrium_measure(m, w, {{20, 0}}), DomainError);
}

TEST_CASE("correlation scale") {
  const Window w = Window::torus(128);
  const auto c0 = correlation_scale(0, 32, w);
  CHECK(c0.xi == 32);
  CHECK(c0.abar == 0);
  for (double a : {-0.9, -0.3, 0.2, 0.6, 0.99}) {
    const auto c = correlation_scale(a, 32, w);
    CHECK(c.xi >= 1);
    CHECK(c.xi <= 32);
    CHECK(c.abar == doctest::Approx(a * std::sqrt(c.g_N)));
  }
  CHECK_THROWS_AS(correlation_scale(1.0, 32, w), DomainError);
}
