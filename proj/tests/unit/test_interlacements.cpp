#include <doctest.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <map>

#include "gff2d/errors.hpp"
#include "gff2d/interlacements.hpp"
#include "gff2d/potential.hpp"

using namespace gff2d;

TEST_CASE("anchor capacity agrees with the equilibrium measure") {
  const WalkModel m(16);
  const Window w = Window::box(48);
  const PointSet K = box_set({0, 0}, 3);
  const InterlacementSampler s(m, w, K);
  CHECK(s.cap() == doctest::Approx(equilibrium_measure(m, w, K).cap).epsilon(1e-9));
  const InterlacementSampler whole(m, Window::box(16));
  // every boundary edge leads out of the window
  CHECK(whole.cap() == doctest::Approx(256.0 / 256 + 16.0).epsilon(1e-12));
  CHECK_THROWS_AS(s.sample(0.0, 1), DomainError);
}

TEST_CASE("empty sample and trivial local uniqueness") {
  const WalkModel m(16);
  const Window w = Window::box(48);
  const InterlacementSampler s(m, w, box_set({0, 0}, 3));
  bool found = false;
  for (std::uint64_t seed = 1; seed < 200 && !found; ++seed) {
    const auto smp = s.sample(1e-3, seed);
    if (smp.trajectories.empty()) {
      found = true;
      CHECK(smp.visited.empty());
      CHECK(smp.occupation.empty());
      CHECK(smp.traversed_edges.empty());
      CHECK(loc_uniq(smp, {0, 0}, 4, 2));
    }
  }
  CHECK(found);
  for (std::uint64_t seed = 1; seed < 400; ++seed) {
    const auto smp = s.sample(0.5, seed);
    if (smp.trajectories.size() == 1) {
      CHECK(loc_uniq(smp, {0, 0}, 4, 2));
      break;
    }
  }
  const auto big = s.sample(1.0, 3);
  CHECK_THROWS_AS(loc_uniq(big, {0, 0}, 10, 3), DomainError);
}

TEST_CASE("occupation positivity, determinism and thinning") {
  const WalkModel m(16);
  const Window w = Window::box(48);
  const InterlacementSampler s(m, w, box_set({0, 0}, 5));
  const auto a = s.sample(3.0, 42, 7);
  const auto b = s.sample(3.0, 42, 7);
  CHECK(a.visited == b.visited);
  CHECK(a.occupation == b.occupation);
  REQUIRE(a.occupation.size() == a.visited.size());
  for (std::size_t k = 0; k < a.visited.size(); ++k) {
    CHECK(a.occupation[k].first == a.visited[k]);
    CHECK(a.occupation[k].second > 0);
  }
  const auto lo = a.at_level(1.0);
  CHECK(std::includes(a.visited.begin(), a.visited.end(), lo.visited.begin(), lo.visited.end()));
  CHECK(std::includes(a.traversed_edges.begin(), a.traversed_edges.end(), lo.traversed_edges.begin(),
                      lo.traversed_edges.end()));
  for (const auto& t : a.trajectories) {
    const Point e = w.point(t.path[t.entrance]);
    CHECK(std::binary_search(s.anchor().begin(), s.anchor().end(), e));
    for (std::size_t k = 0; k < t.entrance; ++k)
      CHECK_FALSE(std::binary_search(s.anchor().begin(), s.anchor().end(), w.point(t.path[k])));
  }
}

TEST_CASE("backward first steps follow the conditioned kernel") {
  const WalkModel m(8);
  const Window w = Window::box(32);
  const PointSet K = make_point_set({{0, 0}, {1, 0}, {0, 1}});
  const InterlacementSampler s(m, w, K);
  std::map<Point, std::array<long, 5>> counts;
  std::map<Point, long> n;
  for (std::uint64_t k = 0; k < 3000; ++k) {
    const auto smp = s.sample(20.0, 5, k, {false, false});
    for (const auto& t : smp.trajectories) {
      const Point x = w.point(t.path[t.entrance]);
      counts[x][t.backward_first_step] += 1;
      n[x] += 1;
    }
  }
  double worst = 0;
  for (Point x : K) {
    const auto law = s.backward_first_step_law(x);
    for (int c = 0; c < 5; ++c) {
      const double p = law[c], nn = n[x];
      if (p == 0) {
        CHECK(counts[x][c] == 0);
        continue;
      }
      const double z = (counts[x][c] / nn - p) / std::sqrt(p * (1 - p) / nn);
      worst = std::max(worst, std::abs(z));
    }
  }
  INFO("max |z| " << worst);
  CHECK(worst < 3);
}

TEST_CASE("trajectory counts, vacancy and mean occupation") {
  const WalkModel m(16);
  const Window w = Window::box(64);
  const PointSet Kp = ball({0, 0}, 2);
  const double capK = equilibrium_measure(m, w, Kp).cap;
  const InterlacementSampler s(m, w, box_set({0, 0}, 4));
  const auto v = vacancy_experiment(s, Kp, capK, 1.0 / capK, 4000, 17);
  INFO("vacancy " << v.p_hat << " vs " << v.expected);
  CHECK(std::abs(v.p_hat - v.expected) < 3 * v.std_error);
  CHECK(std::abs(v.mean_count - v.expected_count) < 3 * v.count_std_error);

  // E[l_0^u] = u whenever 0 lies in the anchor set
  const InterlacementSampler whole(m, Window::box(12));
  double s1 = 0, s2 = 0;
  const long n = 20000;
  for (long k = 0; k < n; ++k) {
    const double l = whole.sample(0.7, 9, k).occupation_at({0, 0});
    s1 += l;
    s2 += l * l;
  }
  const double mean = s1 / n, se = std::sqrt((s2 / n - mean * mean) / n);
  INFO("mean occupation " << mean << " +- " << se);
  CHECK(std::abs(mean - 0.7) < 3 * se);
}

TEST_CASE("KS statistic, isomorphism and its negative control") {
  std::vector<double> x, y;
  for (int i = 0; i < 100; ++i) x.push_back(i), y.push_back(i + 0.5);
  const auto r = ks_two_sample(x, y);
  CHECK(r.statistic == doctest::Approx(0.01));
  CHECK(r.passes());
  CHECK(ks_two_sample({0, 1, 2}, {5, 6, 7}).statistic == 1.0);

  const WalkModel m(16);
  const Window w = Window::box(8);
  const InterlacementSampler whole(m, w);
  const double a = std::sqrt(2.0 / whole.cap());
  const auto t = isomorphism_marginal_test(m, w, a, 3000, 21);
  INFO("KS " << t.ks.statistic << " crit " << t.ks.critical_1pct);
  CHECK(t.ks.passes());
  CHECK(t.mean_lhs == doctest::Approx(t.mean_rhs).epsilon(0.05));
  const auto neg = isomorphism_marginal_test(m, w, 0.8, 3000, 21, 0.0);
  CHECK_FALSE(neg.ks.passes());
}

TEST_CASE("lambda helper") {
  CHECK(locuniq_lambda(64, 32, 1.5) == 1.5);
  CHECK(locuniq_lambda(64, 16, 1.0) == 2.0);
  CHECK(locuniq_lambda(1024, 4, 2.0) == doctest::Approx(16.0));
}
