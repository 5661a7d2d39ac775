#include <doctest.h>

#include <cmath>
#include <set>

#include "gff2d/coarse_grain.hpp"
#include "gff2d/errors.hpp"
#include "gff2d/potential.hpp"

using namespace gff2d;

TEST_CASE("scale recursion") {
  const auto s = make_scales(1, 100, 1e5);
  CHECK(s.L_seq[0] == 1000.0);
  CHECK(s.l_seq[0] == s.L_seq[0]);
  CHECK(s.k == 1);
  CHECK(s.L_seq[1] == 2 * (s.L_seq[0] + 10 * s.l_seq[0]));
  CHECK(s.l_seq[1] == s.L_seq[1] / 4);
  const auto t = make_scales(2, 150, 5e7);
  for (int j = 0; j <= t.k; ++j) {
    const double ratio = t.L_seq[j] / (2.0 * 150 * std::ldexp(1.0, j));
    CHECK(ratio >= 1);
    CHECK(ratio <= t.C_measured + 1e-12);
  }
  CHECK(t.L_seq[t.k] >= 5e7 / 200);
  CHECK(t.L_seq[t.k] <= 5e7 / 4);
  CHECK_THROWS_AS(make_scales(1, 100, 5e4), ValidationError);
  CHECK_THROWS_AS(make_scales(1, 99, 1e6), ValidationError);
  CHECK(lambda_spacing(1) == 1);
  CHECK(lambda_spacing(3) == 2);
  CHECK(lambda_spacing(1000) == 707);
}

TEST_CASE("tree embedding on generated paths") {
  const auto s = make_scales(1, 100, 7e5);
  REQUIRE(s.k == 2);
  for (PathKind kind : {PathKind::straight, PathKind::drifted_walk, PathKind::staircase}) {
    const Path p = generate_test_path(kind, {0, 0}, static_cast<int>(2 * s.L_seq[2] + 1000), 1, 3);
    const auto t = embed_tree(p, {0, 0}, s);
    CHECK(t.tau[0] == Point{0, 0});
    const auto rep = verify_embedding(t, p, s);
    INFO(to_string(kind));
    CHECK(rep.total() == 0);
    CHECK(rep.pairs_checked == 1 + 6);
  }
  // a path that stays inside D^{L_k} is rejected
  Path shortp{{0, 0}};
  for (int i = 1; i < 1000; ++i) shortp.push_back({i, 0});
  CHECK_THROWS_AS(embed_tree(shortp, {0, 0}, s), ValidationError);
}

TEST_CASE("coarse graining structure and determinism") {
  CoarseGrainOptions opt;
  opt.peel_radius = 1e5;
  const int N = 1200000;
  int checked = 0;
  for (PathKind kind : {PathKind::straight, PathKind::spiral, PathKind::drifted_walk, PathKind::staircase}) {
    const Path p = generate_test_path(kind, {0, 0}, N, 1, 11);
    const auto r = coarse_grain_path(p, {0, 0}, N, 1, 100, opt);
    CHECK(r.scales.P == 2);
    CHECK(r.collection.size() == 4);
    const auto rep = verify_coarse_grain(r, p, opt);
    INFO(to_string(kind));
    CHECK(rep.total() == 0);
    const auto again = coarse_grain_path(p, {0, 0}, N, 1, 100, opt);
    CHECK(again.collection == r.collection);
    CHECK(again.path_digest == r.path_digest);
    ++checked;
  }
  CHECK(checked == 4);
  const Path bad{{0, 0}, {2, 0}};
  CHECK_THROWS_AS(coarse_grain_path(bad, {0, 0}, N, 1, 100, opt), ValidationError);
  CHECK_THROWS_AS(read_path("/nonexistent/path.txt"), ValidationError);
}

TEST_CASE("exclusion radius drops inner parts") {
  CoarseGrainOptions opt;
  opt.peel_radius = 1e5;
  opt.exclusion_radius = 400000;
  const int N = 1500000;
  const Path p = generate_test_path(PathKind::straight, {0, 0}, N, 1, 2);
  const auto r = coarse_grain_path(p, {0, 0}, N, 1, 100, opt);
  CHECK(r.excluded_parts >= 1);
  CHECK(verify_coarse_grain(r, p, opt).total() == 0);
}

TEST_CASE("capacity of the coarse-grained set") {
  CoarseGrainOptions opt;
  opt.peel_radius = 2e5;
  const int N = 2500000;
  const Path p = generate_test_path(PathKind::staircase, {0, 0}, N, 2, 5);
  const auto r = coarse_grain_path(p, {0, 0}, N, 2, 100, opt);
  REQUIRE(r.collection.size() == 4);
  const auto c0 = capacity_of_coarse_grained(r, N, 0.0);
  CHECK(c0.cap == doctest::Approx(plane_capacity(N, box_union(r.collection, 2))).epsilon(1e-12));
  const auto c1 = capacity_of_coarse_grained(r, N, 0.25);
  const auto c2 = capacity_of_coarse_grained(r, N, 0.5);
  CHECK(c1.dropped.size() == 1);
  CHECK(c2.dropped.size() == 2);
  CHECK(c1.cap <= c0.cap);
  CHECK(c2.cap <= c1.cap);
  const Window small = Window::box(1000);
  CHECK_THROWS_AS(capacity_of_coarse_grained(r, N, 0.0, &small), DomainError);
  CHECK(std::isfinite(required_constant(c0.cap, c0.H, 1.496, 0.1)));
}
