#include "gff2d/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "gff2d/errors.hpp"

namespace gff2d {

double norm(Point p) { return std::sqrt(static_cast<double>(norm2(p))); }

PointSet make_point_set(std::vector<Point> pts) {
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  return pts;
}

bool contains(const PointSet& set, Point p) {
  return std::binary_search(set.begin(), set.end(), p);
}

PointSet ball(Point c, double r) {
  if (!(r >= 0)) throw DomainError("ball: negative radius");
  PointSet out;
  const int m = static_cast<int>(std::floor(r));
  const double r2 = r * r;
  for (int i = -m; i <= m; ++i)
    for (int j = -m; j <= m; ++j)
      if (static_cast<double>(i) * i + static_cast<double>(j) * j <= r2 + 1e-9)
        out.push_back({c.x + i, c.y + j});
  return out;  // already sorted
}

PointSet box_set(Point c, int half) {
  if (half < 0) throw DomainError("box_set: negative half-side");
  PointSet out;
  for (int i = -half; i <= half; ++i)
    for (int j = -half; j <= half; ++j) out.push_back({c.x + i, c.y + j});
  return out;
}

PointSet set_union(const PointSet& a, const PointSet& b) {
  PointSet out;
  std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

PointSet inner_boundary(const PointSet& set) {
  PointSet out;
  for (Point p : set)
    for (Point s : kSteps)
      if (!contains(set, p + s)) {
        out.push_back(p);
        break;
      }
  return out;
}

double set_distance(const PointSet& a, const PointSet& b) {
  if (a.empty() || b.empty()) throw DomainError("set_distance: empty set");
  long long best = std::numeric_limits<long long>::max();
  for (Point p : a)
    for (Point q : b) best = std::min(best, norm2(p - q));
  return std::sqrt(static_cast<double>(best));
}

WalkModel::WalkModel(int n)
    : N(n), edge_conductance(0.25), killing_rate(0), total_rate(0) {
  if (n < 1) throw DomainError("WalkModel: N must be >= 1");
  killing_rate = 1.0 / (static_cast<double>(n) * n);
  total_rate = 1.0 + killing_rate;
}

std::string to_string(WindowKind k) { return k == WindowKind::box ? "box" : "torus"; }

Window::Window(WindowKind k, int side, Point c) : kind_(k), side_(side), center_(c) {
  if (side < 4) throw DomainError("Window: side must be >= 4");
  if (side > 46340) throw ResourceError("Window: side too large");
}

Window Window::box(int side, Point center) { return Window(WindowKind::box, side, center); }
Window Window::torus(int side, Point center) { return Window(WindowKind::torus, side, center); }

bool Window::inside(Point p) const {
  const Point o = lower_left();
  return p.x >= o.x && p.y >= o.y && p.x < o.x + side_ && p.y < o.y + side_;
}

Point Window::wrap(Point p) const {
  if (kind_ == WindowKind::box) return p;
  const Point o = lower_left();
  auto md = [this](int v) { return ((v % side_) + side_) % side_; };
  return {o.x + md(p.x - o.x), o.y + md(p.y - o.y)};
}

std::size_t Window::index(Point p) const {
  const Point q = wrap(p);
  if (!inside(q)) throw DomainError("Window::index: point outside window");
  const Point o = lower_left();
  return static_cast<std::size_t>(q.y - o.y) * side_ + static_cast<std::size_t>(q.x - o.x);
}

Point Window::point(std::size_t i) const {
  if (i >= size()) throw DomainError("Window::point: index out of range");
  const Point o = lower_left();
  return {o.x + static_cast<int>(i % side_), o.y + static_cast<int>(i / side_)};
}

std::size_t Window::neighbor(std::size_t i, int d) const {
  const int s = side_;
  int cx = static_cast<int>(i % s), cy = static_cast<int>(i / s);
  cx += kSteps[d].x;
  cy += kSteps[d].y;
  if (cx < 0 || cy < 0 || cx >= s || cy >= s) {
    if (kind_ == WindowKind::box) return npos;
    cx = (cx + s) % s;
    cy = (cy + s) % s;
  }
  return static_cast<std::size_t>(cy) * s + cx;
}

}  // namespace gff2d
