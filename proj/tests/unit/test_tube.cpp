#include <doctest.h>

#include <numeric>

#include "gff2d/errors.hpp"
#include "gff2d/potential.hpp"
#include "gff2d/tube.hpp"

using namespace gff2d;

TEST_CASE("full segment is a degenerate tube") {
  std::vector<int> A(32);
  std::iota(A.begin(), A.end(), 1);
  const Tube t = build_tube(32, 32, A, TubeShape::segments, 1.0);
  CHECK(t.parts.size() == 32);
  for (const auto& s : t.parts) {
    CHECK(s.size() == 1);
    CHECK(s[0].y == 0);
  }
  const auto u = tube_union(t);
  CHECK(u.size() == 32);
  CHECK(u.front() == Point{-16, 0});
  CHECK(u.back() == Point{15, 0});
  CHECK(t.separation_delta == 0);
}

TEST_CASE("spacing parameters agree with the exhaustive check") {
  for (auto shape : {TubeShape::segments, TubeShape::boxes})
    for (double scale : {0.25, 0.5, 0.8}) {
      const Tube t = build_tube(120, 10, {1, 2, 4, 5, 6, 9, 10}, shape, scale);
      CHECK(t.separation_delta == doctest::Approx(separation_delta_bruteforce(t)).epsilon(1e-12));
      CHECK(t.diameter_inverse_delta == doctest::Approx(diameter_inverse_delta_bruteforce(t)).epsilon(1e-12));
      CHECK(t.separation_delta < 1);
      for (const auto& s : t.parts)
        for (Point p : s) CHECK(norm(p) <= 2 * 120);
    }
}

TEST_CASE("tube validation") {
  CHECK_THROWS_AS(build_tube(10, 11, {1}, TubeShape::segments, 1), ValidationError);
  CHECK_THROWS_AS(build_tube(10, 5, {}, TubeShape::segments, 1), ValidationError);
  CHECK_THROWS_AS(build_tube(10, 5, {0}, TubeShape::segments, 1), ValidationError);
  CHECK_THROWS_AS(build_tube(10, 5, {6}, TubeShape::segments, 1), ValidationError);
  CHECK_THROWS_AS(build_tube(10, 5, {1}, TubeShape::segments, 0), ValidationError);
  CHECK_THROWS_AS(build_tube(100, 10, {2, 2}, TubeShape::segments, 1), ValidationError);
  // blocks filling their cells leave only a one-site gap: fine for P = N/2
  CHECK_NOTHROW(build_tube(100, 50, {1, 2, 3}, TubeShape::segments, 1));
}

TEST_CASE("tube capacity grows with the occupied blocks") {
  const Tube a = build_tube(64, 8, {1, 3, 5}, TubeShape::boxes, 0.5);
  const Tube b = build_tube(64, 8, {1, 2, 3, 5, 7}, TubeShape::boxes, 0.5);
  CHECK(plane_capacity(64, tube_union(a)) < plane_capacity(64, tube_union(b)));
}
