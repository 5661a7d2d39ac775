#pragma once

#include <algorithm>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace gff2d {

struct Point {
  int x = 0;
  int y = 0;
  auto operator<=>(const Point&) const = default;
};

inline Point operator+(Point a, Point b) { return {a.x + b.x, a.y + b.y}; }
inline Point operator-(Point a, Point b) { return {a.x - b.x, a.y - b.y}; }
inline long long norm2(Point p) {
  return static_cast<long long>(p.x) * p.x + static_cast<long long>(p.y) * p.y;
}
double norm(Point p);
inline int norm_inf(Point p) { return std::max(p.x < 0 ? -p.x : p.x, p.y < 0 ? -p.y : p.y); }
inline int norm_1(Point p) { return (p.x < 0 ? -p.x : p.x) + (p.y < 0 ? -p.y : p.y); }

inline constexpr Point kSteps[4] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};

/// Sorted, duplicate-free list of lattice points.
using PointSet = std::vector<Point>;

PointSet make_point_set(std::vector<Point> pts);
bool contains(const PointSet& set, Point p);
/// Closed Euclidean ball {y : |y - c| <= r}.
PointSet ball(Point c, double r);
/// Square {c + (i,j) : |i|,|j| <= half}.
PointSet box_set(Point c, int half);
PointSet set_union(const PointSet& a, const PointSet& b);
/// Points of the set that have a nearest neighbour outside it.
PointSet inner_boundary(const PointSet& set);
double set_distance(const PointSet& a, const PointSet& b);

/// Continuous-time walk on Z^2 with conductance 1/4 per edge and killing
/// rate N^-2 at every site.
struct WalkModel {
  explicit WalkModel(int n);
  int N;
  double edge_conductance;
  double killing_rate;
  double total_rate;
};

enum class WindowKind { box, torus };

std::string to_string(WindowKind k);

/// Finite computational domain: either a box with absorbing exterior or a
/// periodic torus. Sites are indexed row-major from the lower-left corner.
class Window {
 public:
  static Window box(int side, Point center = {});
  static Window torus(int side, Point center = {});

  WindowKind kind() const { return kind_; }
  int side() const { return side_; }
  Point center() const { return center_; }
  Point lower_left() const { return {center_.x - side_ / 2, center_.y - side_ / 2}; }
  std::size_t size() const { return static_cast<std::size_t>(side_) * side_; }

  /// True iff p is a site of the fundamental domain.
  bool inside(Point p) const;
  /// Maps p into the fundamental domain (torus only; identity on boxes).
  Point wrap(Point p) const;
  std::size_t index(Point p) const;
  Point point(std::size_t i) const;
  /// Index of the neighbour of site i in direction d, or npos if it lies in
  /// the absorbing exterior of a box.
  std::size_t neighbor(std::size_t i, int d) const;
  /// Half-side of the largest centred box that sits in the middle quarter.
  int evaluation_radius() const { return side_ / 8; }
  /// Whether the window meets the recommended size for mass scale N.
  bool production_sized(const WalkModel& m, int factor = 4) const {
    return side_ >= factor * m.N;
  }

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

 private:
  Window(WindowKind k, int side, Point c);
  WindowKind kind_;
  int side_;
  Point center_;
};

}  // namespace gff2d
