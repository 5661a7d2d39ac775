#include "gff2d/tube.hpp"

#include <algorithm>
#include <cmath>

#include "gff2d/errors.hpp"

namespace gff2d {
namespace {

struct Rect {
  int x0, x1, y0, y1;  // inclusive
};

double rect_min_distance(const Rect& a, const Rect& b) {
  const int dx = std::max({0, b.x0 - a.x1, a.x0 - b.x1});
  const int dy = std::max({0, b.y0 - a.y1, a.y0 - b.y1});
  return std::sqrt(double(dx) * dx + double(dy) * dy);
}

double rect_max_distance(const Rect& a, const Rect& b) {
  const int dx = std::max(std::abs(b.x1 - a.x0), std::abs(a.x1 - b.x0));
  const int dy = std::max(std::abs(b.y1 - a.y0), std::abs(a.y1 - b.y0));
  return std::sqrt(double(dx) * dx + double(dy) * dy);
}

}  // namespace

Tube build_tube(int N, int P, std::vector<int> A, TubeShape shape, double scale,
                TubeHypothesis hypothesis) {
  if (N < 1 || P < 1 || P > N) throw ValidationError("build_tube: need 1 <= P <= N");
  if (A.empty()) throw ValidationError("build_tube: A must be nonempty");
  if (!(scale > 0 && scale <= 1)) throw ValidationError("build_tube: scale must lie in (0,1]");
  std::sort(A.begin(), A.end());
  if (std::adjacent_find(A.begin(), A.end()) != A.end()) throw ValidationError("build_tube: repeated index");
  if (A.front() < 1 || A.back() > P) throw ValidationError("build_tube: index outside 1..P");

  Tube t;
  t.N = N;
  t.P = P;
  t.shape = shape;
  t.scale = scale;
  t.indices = A;
  const double block = double(N) / P;
  const int len = std::max(1, static_cast<int>(std::floor(scale * block + 1e-9)));
  std::vector<Rect> rects;
  for (int i : A) {
    const int s = static_cast<int>(std::floor(-N / 2.0 + (i - 1) * block + 1e-9));
    Rect r{s, s + len - 1, 0, 0};
    if (shape == TubeShape::boxes) {
      r.y0 = -(len / 2);
      r.y1 = r.y0 + len - 1;
    }
    PointSet S;
    for (int y = r.y0; y <= r.y1; ++y)
      for (int x = r.x0; x <= r.x1; ++x) S.push_back({x, y});
    t.parts.push_back(make_point_set(std::move(S)));
    rects.push_back(r);
  }
  double sep = 0, inv = 0;
  for (std::size_t a = 0; a < A.size(); ++a)
    for (std::size_t b = 0; b < A.size(); ++b) {
      const double gap = std::abs(A[a] - A[b]);
      if (a != b) sep = std::max(sep, gap - rect_min_distance(rects[a], rects[b]) / block);
      inv = std::max(inv, rect_max_distance(rects[a], rects[b]) / block - gap);
    }
  t.separation_delta = std::max(0.0, sep);
  t.diameter_inverse_delta = std::max(0.0, inv);
  if (hypothesis == TubeHypothesis::separation && t.separation_delta >= 1)
    throw ValidationError("build_tube: blocks too close for the separation hypothesis (delta = " +
                          std::to_string(t.separation_delta) + ")");
  return t;
}

PointSet tube_union(const Tube& t) {
  PointSet out;
  for (const auto& s : t.parts) out.insert(out.end(), s.begin(), s.end());
  return make_point_set(std::move(out));
}

double separation_delta_bruteforce(const Tube& t) {
  const double block = double(t.N) / t.P;
  double sep = 0;
  for (std::size_t a = 0; a < t.parts.size(); ++a)
    for (std::size_t b = 0; b < t.parts.size(); ++b)
      if (a != b)
        sep = std::max(sep, std::abs(t.indices[a] - t.indices[b]) - set_distance(t.parts[a], t.parts[b]) / block);
  return std::max(0.0, sep);
}

double diameter_inverse_delta_bruteforce(const Tube& t) {
  const double block = double(t.N) / t.P;
  double inv = 0;
  for (std::size_t a = 0; a < t.parts.size(); ++a)
    for (std::size_t b = 0; b < t.parts.size(); ++b) {
      long long far = 0;
      for (Point p : t.parts[a])
        for (Point q : t.parts[b]) far = std::max(far, norm2(p - q));
      inv = std::max(inv, std::sqrt(double(far)) / block - std::abs(t.indices[a] - t.indices[b]));
    }
  return std::max(0.0, inv);
}

}  // namespace gff2d
