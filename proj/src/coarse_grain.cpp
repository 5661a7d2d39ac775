#include "gff2d/coarse_grain.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

#include "gff2d/digest.hpp"
#include "gff2d/errors.hpp"
#include "gff2d/green.hpp"
#include "gff2d/potential.hpp"
#include "gff2d/rng.hpp"

namespace gff2d {

namespace {

bool in_ball(Point p, Point c, double r) { return r >= 0 && static_cast<double>(norm2(p - c)) <= r * r; }

double dist(Point a, Point b) { return std::sqrt(static_cast<double>(norm2(a - b))); }

std::string show(Point p) { return "(" + std::to_string(p.x) + "," + std::to_string(p.y) + ")"; }

long floor_div(long a, long b) { return a >= 0 ? a / b : -((-a + b - 1) / b); }

// Lexicographically first q in Lambda(r_lat) with |q - g| <= r_near,
// |q - c| <= r_out and |q - c| > r_in (r_in < 0 for no inner hole).
bool first_admissible(Point g, double r_near, double r_lat, Point c, double r_out, double r_in, Point& out) {
  const int s = lambda_spacing(r_lat);
  const long ax0 = floor_div(static_cast<long>(std::floor(g.x - r_near)), s) - 1;
  const long ax1 = floor_div(static_cast<long>(std::ceil(g.x + r_near)), s) + 1;
  const long ay0 = floor_div(static_cast<long>(std::floor(g.y - r_near)), s) - 1;
  const long ay1 = floor_div(static_cast<long>(std::ceil(g.y + r_near)), s) + 1;
  for (long a = ax0; a <= ax1; ++a)
    for (long b = ay0; b <= ay1; ++b) {
      const Point q{static_cast<int>(a * s), static_cast<int>(b * s)};
      if (!in_ball(q, g, r_near) || !in_ball(q, c, r_out)) continue;
      if (r_in >= 0 && in_ball(q, c, r_in)) continue;
      out = q;  // x-major scan yields the lexicographic minimum first
      return true;
    }
  return false;
}

struct Embedder {
  const Path& path;
  const CoarseGrainScales& s;
  TreeEmbedding& t;

  void rec(std::size_t begin, std::size_t end, Point c, int j, int depth, std::uint64_t v) {
    t.tau[tree_index(depth, v)] = c;
    if (j == 0) {
      t.leaf_points[v] = path[begin];
      t.leaf_positions[v] = begin;
      return;
    }
    const double Lj = s.L_seq[j], lj = s.l_seq[j], lm = s.l_seq[j - 1];
    std::size_t e = begin;
    while (e < end && in_ball(path[e], c, 2 * Lj)) ++e;
    if (e == end)
      throw ValidationError("embed_tree: segment starting at path position " + std::to_string(begin) +
                            " never leaves D^{L_" + std::to_string(j) + "} around " + show(c));
    if (depth == 0) t.path_end = e + 1;
    std::size_t last = begin;
    for (std::size_t i = begin; i <= e; ++i)
      if (in_ball(path[i], c, Lj)) last = i;
    Point t0, t1;
    if (!first_admissible(path[begin], lm, lm, c, lj + lm, -1, t0))
      throw ValidationError("embed_tree: no admissible first child near path position " + std::to_string(begin) +
                            " around " + show(c));
    if (!first_admissible(path[last + 1], lm, lm, c, Lj + 2 * lm, Lj - lm, t1))
      throw ValidationError("embed_tree: no admissible second child near path position " +
                            std::to_string(last + 1) + " around " + show(c));
    rec(begin, last + 1, t0, j - 1, depth + 1, 2 * v);
    rec(last + 1, e + 1, t1, j - 1, depth + 1, 2 * v + 1);
  }
};

TreeEmbedding embed_range(const Path& path, std::size_t begin, Point x, const CoarseGrainScales& s) {
  if (s.k < 0 || s.L_seq.size() != static_cast<std::size_t>(s.k) + 1) throw ValidationError("embed_tree: bad scales");
  if (begin >= path.size()) throw ValidationError("embed_tree: empty path");
  if (!in_ball(path[begin], x, s.l_seq[s.k]))
    throw ValidationError("embed_tree: path does not start in C^{l_k} around " + show(x));
  TreeEmbedding t;
  t.k = s.k;
  t.root = x;
  t.tau.resize((std::size_t{1} << (s.k + 1)) - 1);
  t.leaf_points.resize(std::size_t{1} << s.k);
  t.leaf_positions.resize(std::size_t{1} << s.k);
  t.path_end = path.size();
  Embedder{path, s, t}.rec(begin, path.size(), x, s.k, 0, 0);
  return t;
}

}  // namespace

int lambda_spacing(double r) { return std::max(1, static_cast<int>(std::floor(r / std::sqrt(2.0)))); }

bool on_lambda(Point p, double r) {
  const int s = lambda_spacing(r);
  return p.x % s == 0 && p.y % s == 0;
}

CoarseGrainScales make_scales(int L, int M, double target_R) {
  if (L < 1) throw ValidationError("make_scales: L must be >= 1");
  if (M < 100) throw ValidationError("make_scales: M must be >= 100");
  if (!(target_R > 0)) throw ValidationError("make_scales: R must be > 0");
  std::vector<double> Ls{10.0 * L * M}, ls;
  for (int j = 0;; ++j) {
    ls.push_back(Ls[j] / ((j + 1.0) * (j + 1.0)));
    if (Ls[j] > target_R / 4 || j > 60) break;
    Ls.push_back(2 * (Ls[j] + 10 * ls[j]));
  }
  int k = -1;
  for (int j = 1; j < static_cast<int>(Ls.size()); ++j)
    if (Ls[j] >= target_R / 200 && Ls[j] <= target_R / 4) k = j;
  if (k < 0) {
    std::ostringstream os;
    os << "make_scales: no k >= 1 with L_k in [R/200, R/4] = [" << target_R / 200 << ", " << target_R / 4
       << "]; L_0 = " << Ls[0] << ", L_1 = " << (Ls.size() > 1 ? Ls[1] : 2 * (Ls[0] + 10 * ls[0]))
       << "; R must be at least " << 4 * 2 * (Ls[0] + 10 * ls[0]);
    throw ValidationError(os.str());
  }
  CoarseGrainScales s;
  s.L = L;
  s.M = M;
  s.k = k;
  s.L_seq.assign(Ls.begin(), Ls.begin() + k + 1);
  s.l_seq.assign(ls.begin(), ls.begin() + k + 1);
  s.R = target_R;
  for (int j = 0; j <= k; ++j) s.C_measured = std::max(s.C_measured, s.L_seq[j] / (double(L) * M * std::ldexp(1.0, j)));
  return s;
}

double default_peel_radius(int N, int L, int M) {
  const double n = double(N) / (double(M) * L);
  if (!(n > 1)) throw ValidationError("peel radius: N must exceed M L");
  return double(M) * L * std::log(n);
}

TreeEmbedding embed_tree(const Path& path, Point x, const CoarseGrainScales& s) { return embed_range(path, 0, x, s); }

EmbeddingReport verify_embedding(const TreeEmbedding& t, const Path& path, const CoarseGrainScales& s) {
  EmbeddingReport r;
  const int k = t.k;
  if (t.tau.empty() || t.tau[0] != t.root) ++r.position_violations;
  for (int n = 0; n < k; ++n) {
    const int j = k - n;
    const double lj = s.l_seq[j], lm = s.l_seq[j - 1], Lj = s.L_seq[j];
    for (std::uint64_t v = 0; v < (1ull << n); ++v) {
      const Point c = t.tau[tree_index(n, v)];
      const Point a = t.tau[tree_index(n + 1, 2 * v)], b = t.tau[tree_index(n + 1, 2 * v + 1)];
      if (!on_lambda(a, lm) || !in_ball(a, c, lj + lm)) ++r.position_violations;
      if (!on_lambda(b, lm) || !in_ball(b, c, Lj + 2 * lm) || in_ball(b, c, Lj - lm)) ++r.position_violations;
    }
  }
  for (int n = 0; n <= k; ++n) {
    const int j = k - n;
    const double sep = 2 * s.L_seq[j] + 10 * s.l_seq[j];
    const std::uint64_t cnt = 1ull << n;
    for (std::uint64_t a = 0; a < cnt; ++a)
      for (std::uint64_t b = a + 1; b < cnt; ++b) {
        ++r.pairs_checked;
        if (dist(t.tau[tree_index(n, a)], t.tau[tree_index(n, b)]) < sep) ++r.separation_violations;
      }
    // descendants at the leaf level of sigma are v << j .. (v+1) << j
    for (std::uint64_t v = 0; v < cnt; ++v)
      for (std::uint64_t w = v << j; w < ((v + 1) << j); ++w)
        if (dist(t.tau[tree_index(n, v)], t.tau[tree_index(k, w)]) > 2 * s.L_seq[j] + 2 * s.L_seq[0])
          ++r.nesting_violations;
  }
  for (std::uint64_t v = 0; v < (1ull << k); ++v) {
    const std::size_t pos = t.leaf_positions[v];
    const Point c = t.tau[tree_index(k, v)];
    bool ok = pos < path.size() && path[pos] == t.leaf_points[v] && in_ball(path[pos], c, s.l_seq[0]);
    if (!ok) {
      ok = std::any_of(path.begin(), path.end(), [&](Point p) { return in_ball(p, c, s.l_seq[0]); });
    }
    if (!ok) ++r.leaf_violations;
  }
  return r;
}

void check_lambda_path(const Path& p, int L) {
  if (p.empty()) throw ValidationError("path is empty");
  const int s = lambda_spacing(L);
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (!on_lambda(p[i], L)) throw ValidationError("path vertex " + std::to_string(i) + " " + show(p[i]) + " is not in Lambda(L)");
    if (i > 0 && norm_1(p[i] - p[i - 1]) != s)
      throw ValidationError("path step " + std::to_string(i) + " is not a Lambda(L) nearest-neighbour step");
  }
}

CoarseGrainResult coarse_grain_path(const Path& path, Point x, int N, int L, int M, const CoarseGrainOptions& opt) {
  check_lambda_path(path, L);
  if (!in_ball(path.front(), x, L)) throw ValidationError("coarse_grain_path: path does not start in C^L_x");
  if (std::all_of(path.begin(), path.end(), [&](Point p) { return in_ball(p, x, N - 2.0 * L); }))
    throw ValidationError("coarse_grain_path: path never leaves B(x, N - 2L)");
  CoarseGrainResult r;
  r.x = x;
  r.N = N;
  const double R = opt.peel_radius > 0 ? opt.peel_radius : default_peel_radius(N, L, M);
  r.scales = make_scales(L, M, R);
  r.scales.n = double(N) / (double(M) * L);
  r.scales.P = static_cast<int>(std::floor(N / (5 * R)));
  const int P = r.scales.P;
  if (P < 1) throw ValidationError("coarse_grain_path: P = floor(N/(5R)) < 1");
  r.path_digest = path_digest(path);
  for (int i = 1; i <= P; ++i) {
    const double ro = (5.0 * i - 1) * N / (5.0 * P), ri = (5.0 * i - 2) * N / (5.0 * P);
    std::size_t pos = path.size();
    for (std::size_t q = 0; q < path.size(); ++q)
      if (in_ball(path[q], x, ro) && !in_ball(path[q], x, ri)) {
        pos = q;
        break;
      }
    if (pos == path.size())
      throw ValidationError("coarse_grain_path: path never enters annulus " + std::to_string(i));
    r.anchors.push_back(path[pos]);
    r.anchor_positions.push_back(pos);
    r.trees.push_back(embed_range(path, pos, path[pos], r.scales));
    std::vector<Point> part = r.trees.back().leaf_points;
    if (opt.exclusion_radius > 0 &&
        std::any_of(part.begin(), part.end(), [&](Point c) { return dist(c, x) - L <= opt.exclusion_radius; })) {
      ++r.excluded_parts;
      part.clear();
    }
    r.parts.push_back(part);
    r.collection.insert(r.collection.end(), part.begin(), part.end());
  }
  std::sort(r.collection.begin(), r.collection.end());
  return r;
}

namespace {
// Exact Euclidean distance between the lattice balls B(c, L) and B(x, L).
double ball_distance(Point c, Point x, int L) {
  const PointSet a = ball(c, L), b = ball(x, L);
  double best = 1e300;
  for (Point p : a)
    for (Point q : b) best = std::min(best, dist(p, q));
  return best;
}
}  // namespace

CoarseGrainReport verify_coarse_grain(const CoarseGrainResult& r, const Path& path, const CoarseGrainOptions& opt) {
  CoarseGrainReport rep;
  const CoarseGrainScales& s = r.scales;
  for (const auto& t : r.trees) {
    const auto e = verify_embedding(t, path, s);
    rep.embedding.position_violations += e.position_violations;
    rep.embedding.separation_violations += e.separation_violations;
    rep.embedding.nesting_violations += e.nesting_violations;
    rep.embedding.leaf_violations += e.leaf_violations;
    rep.embedding.pairs_checked += e.pairs_checked;
  }
  Path sorted = path;
  std::sort(sorted.begin(), sorted.end());
  rep.size = r.collection.size();
  for (Point c : r.collection) {
    if (!std::binary_search(sorted.begin(), sorted.end(), c)) ++rep.subset_violations;
    if (!on_lambda(c, s.L) || !in_ball(c, r.x, r.N)) ++rep.lattice_violations;
  }
  const double spacing = 16.0 * s.M * s.L;
  for (std::size_t a = 0; a < r.collection.size(); ++a)
    for (std::size_t b = a + 1; b < r.collection.size(); ++b)
      if (dist(r.collection[a], r.collection[b]) < spacing) ++rep.spacing_violations;
  for (std::size_t i = 0; i < r.parts.size(); ++i) {
    const double need = (5.0 * (i + 1) - 4) * s.R;
    for (Point c : r.parts[i]) {
      // |c - x| - 2L bounds the distance from below; fall back to the exact value
      if (dist(c, r.x) - 2.0 * s.L >= need) continue;
      if (ball_distance(c, r.x, s.L) < need) ++rep.anchoring_violations;
    }
  }
  if (opt.exclusion_radius > 0)
    for (Point c : r.collection)
      for (Point y : ball(c, s.L))
        if (in_ball(y, r.x, opt.exclusion_radius)) {
          ++rep.exclusion_violations;
          break;
        }
  return rep;
}

PointSet box_union(const std::vector<Point>& centers, int L) {
  PointSet out;
  for (Point c : centers) {
    const PointSet b = ball(c, L);
    out.insert(out.end(), b.begin(), b.end());
  }
  return make_point_set(out);
}

CoarseCapacity capacity_of_coarse_grained(const CoarseGrainResult& r, int N, double rho, const Window* window) {
  if (!(rho >= 0 && rho < 1)) throw DomainError("capacity_of_coarse_grained: rho must lie in [0,1)");
  const int L = r.scales.L;
  if (window)
    for (Point c : r.collection)
      for (Point y : ball(c, L))
        if (!window->inside(y)) throw DomainError("capacity_of_coarse_grained: box at " + show(c) + " leaves the window");
  CoarseCapacity out;
  out.kept = r.collection;
  out.H = coarse_grain_H(r.scales.n, r.scales.M);
  if (out.kept.empty()) return out;
  auto g = plane_green(N);
  const GreenKernel kern = [&g](int dx, int dy) { return (*g)(dx, dy); };
  const std::size_t drop = static_cast<std::size_t>(std::floor(rho * r.collection.size()));
  for (;;) {
    const PointSet K = box_union(out.kept, L);
    const auto eq = equilibrium_measure(WalkModel(N), kern, K);
    out.cap = eq.cap;
    if (out.dropped.size() >= drop || out.kept.size() <= 1) break;
    // mass per box; boxes are disjoint because centres are far apart
    std::vector<double> mass(out.kept.size(), 0.0);
    for (std::size_t i = 0; i < K.size(); ++i) {
      std::size_t best = 0;
      for (std::size_t b = 1; b < out.kept.size(); ++b)
        if (norm2(K[i] - out.kept[b]) < norm2(K[i] - out.kept[best])) best = b;
      mass[best] += eq.weights[i];
    }
    const std::size_t b = std::max_element(mass.begin(), mass.end()) - mass.begin();
    out.dropped.push_back(out.kept[b]);
    out.kept.erase(out.kept.begin() + b);
  }
  return out;
}

double coarse_grain_H(double n, int M) {
  if (!(n > 1)) return std::nan("");
  const double ln = std::log(n);
  return ln * ln / n + std::log(M * ln) * ln / n;
}

double required_constant(double cap, double H, double cap_segment, double eta) {
  return (1.0 / cap - (1.0 + eta) / cap_segment) / H;
}

Path read_path(const std::string& file) {
  std::ifstream in(file);
  if (!in) throw ValidationError("cannot open path file " + file);
  Path p;
  std::string line;
  std::size_t ln = 0;
  while (std::getline(in, line)) {
    ++ln;
    const auto h = line.find('#');
    if (h != std::string::npos) line.resize(h);
    std::istringstream ss(line);
    long a, b;
    if (!(ss >> a)) continue;
    if (!(ss >> b)) throw ValidationError(file + ":" + std::to_string(ln) + ": expected two integers");
    std::string rest;
    if (ss >> rest) throw ValidationError(file + ":" + std::to_string(ln) + ": trailing text");
    p.push_back({static_cast<int>(a), static_cast<int>(b)});
  }
  return p;
}

void write_path(const std::string& file, const Path& p) {
  std::ofstream out(file);
  if (!out) throw ValidationError("cannot write " + file);
  for (Point q : p) out << q.x << ' ' << q.y << '\n';
}

std::string path_digest(const Path& p) {
  std::string s;
  s.reserve(p.size() * 12);
  for (Point q : p) {
    s += std::to_string(q.x);
    s += ' ';
    s += std::to_string(q.y);
    s += '\n';
  }
  return sha256_hex(s);
}

}  // namespace gff2d

namespace gff2d {

const char* to_string(PathKind k) {
  switch (k) {
    case PathKind::straight: return "straight";
    case PathKind::spiral: return "spiral";
    case PathKind::drifted_walk: return "drifted_walk";
    default: return "staircase";
  }
}

PathKind path_kind_from_string(const std::string& s) {
  for (PathKind k : {PathKind::straight, PathKind::spiral, PathKind::drifted_walk, PathKind::staircase})
    if (s == to_string(k)) return k;
  throw ValidationError("unknown path kind '" + s + "'");
}

namespace {
// Appends Lambda(L) steps from the path's last vertex towards target.
void walk_to(Path& p, Point target, int s) {
  Point c = p.back();
  while (std::abs(target.x - c.x) >= s || std::abs(target.y - c.y) >= s) {
    const int dx = target.x - c.x, dy = target.y - c.y;
    if (std::abs(dx) >= std::abs(dy))
      c.x += dx > 0 ? s : -s;
    else
      c.y += dy > 0 ? s : -s;
    p.push_back(c);
  }
}
}  // namespace

Path generate_test_path(PathKind kind, Point x, int N, int L, std::uint64_t seed) {
  const int s = lambda_spacing(L);
  if (x.x % s || x.y % s) throw ValidationError("generate_test_path: x is not in Lambda(L)");
  Engine rng = make_engine(stream_key(seed, Stream::paths, static_cast<std::uint64_t>(kind)));
  const double stop = N - 2.0 * L;
  Path p{x};
  auto outside = [&](Point q) { return !in_ball(q, x, stop); };
  const double two_pi = 2 * std::acos(-1.0);
  switch (kind) {
    case PathKind::straight: {
      const double th = two_pi * uniform01(rng);
      for (double r = s; !outside(p.back()); r += s)
        walk_to(p, {x.x + static_cast<int>(std::lround(r * std::cos(th))), x.y + static_cast<int>(std::lround(r * std::sin(th)))}, s);
      break;
    }
    case PathKind::spiral: {
      const double th0 = two_pi * uniform01(rng);
      const double turns = 1.25 + 1.5 * uniform01(rng);
      const double b = N / (turns * two_pi);  // r = b * phi
      const int dir = uniform01(rng) < 0.5 ? 1 : -1;
      for (double phi = 0; !outside(p.back());) {
        const double r = b * phi;
        phi += std::min(0.5, 4.0 * s / std::max(r, 1.0));
        const double rr = b * phi, a = th0 + dir * phi;
        walk_to(p, {x.x + static_cast<int>(std::lround(rr * std::cos(a))), x.y + static_cast<int>(std::lround(rr * std::sin(a)))}, s);
      }
      break;
    }
    case PathKind::drifted_walk: {
      const double beta = 0.6 + 0.8 * uniform01(rng);
      while (!outside(p.back())) {
        const Point c = p.back();
        const double dx = c.x - x.x, dy = c.y - x.y, r = std::hypot(dx, dy);
        double w[4], tot = 0;
        for (int d = 0; d < 4; ++d) {
          const double dot = r > 0 ? (kSteps[d].x * dx + kSteps[d].y * dy) / r : 0.0;
          w[d] = std::exp(beta * dot);
          tot += w[d];
        }
        double u = uniform01(rng) * tot;
        int d = 0;
        while (d < 3 && u >= w[d]) u -= w[d++];
        p.push_back({c.x + s * kSteps[d].x, c.y + s * kSteps[d].y});
      }
      break;
    }
    case PathKind::staircase: {
      const int sx = uniform01(rng) < 0.5 ? 1 : -1, sy = uniform01(rng) < 0.5 ? 1 : -1;
      const double q = 0.2 + 0.6 * uniform01(rng);
      while (!outside(p.back())) {
        Point c = p.back();
        if (uniform01(rng) < q)
          c.x += sx * s;
        else
          c.y += sy * s;
        p.push_back(c);
      }
      break;
    }
  }
  return p;
}

}  // namespace gff2d
