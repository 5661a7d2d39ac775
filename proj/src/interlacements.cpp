#include "gff2d/interlacements.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <random>

#include "gff2d/cable_percolation.hpp"
#include "gff2d/errors.hpp"
#include "gff2d/gff_sampler.hpp"
#include "gff2d/potential.hpp"

namespace gff2d {

namespace {

constexpr std::uint64_t kHoldTag = 0x401d;

bool sorted_has(const std::vector<std::uint32_t>& v, std::uint32_t i) {
  return std::binary_search(v.begin(), v.end(), i);
}

// Direction d with neighbor(a, d) == b.
int step_dir(const Window& w, std::uint32_t a, std::uint32_t b) {
  for (int d = 0; d < 4; ++d)
    if (w.neighbor(a, d) == b) return d;
  return -1;
}

std::uint64_t step_edge(std::uint32_t a, std::uint32_t b, int d) {
  switch (d) {
    case 0: return edge_id(a, 0);
    case 1: return edge_id(b, 0);
    case 2: return edge_id(a, 1);
    default: return edge_id(b, 1);
  }
}

void fill_indices(InterlacementSample& s, const SampleOptions& opt) {
  s.visited.clear();
  s.occupation.clear();
  s.traversed_edges.clear();
  if (opt.occupation || opt.edges) {
    for (const auto& t : s.trajectories) s.visited.insert(s.visited.end(), t.path.begin(), t.path.end());
    std::sort(s.visited.begin(), s.visited.end());
    s.visited.erase(std::unique(s.visited.begin(), s.visited.end()), s.visited.end());
  }
  if (opt.occupation) {
    // The holding times at a site are iid exponential of mean 1/lambda, so
    // a trajectory visiting it c times contributes Gamma(c, 1)/lambda.
    std::vector<std::pair<std::uint32_t, double>> acc;
    for (std::size_t j = 0; j < s.trajectories.size(); ++j) {
      const auto& t = s.trajectories[j];
      Engine rng = make_engine(stream_key(s.key, kHoldTag, j));
      std::vector<std::uint32_t> p = t.path;
      std::sort(p.begin(), p.end());
      for (std::size_t a = 0; a < p.size();) {
        std::size_t b = a;
        while (b < p.size() && p[b] == p[a]) ++b;
        std::gamma_distribution<double> gd(static_cast<double>(b - a), 1.0);
        acc.emplace_back(p[a], gd(rng) / s.total_rate);
        a = b;
      }
    }
    std::sort(acc.begin(), acc.end(), [](auto& x, auto& y) { return x.first < y.first; });
    for (auto& [i, v] : acc) {
      if (!s.occupation.empty() && s.occupation.back().first == i)
        s.occupation.back().second += v;
      else
        s.occupation.emplace_back(i, v);
    }
  }
  if (opt.edges) {
    for (const auto& t : s.trajectories)
      for (std::size_t k = 0; k + 1 < t.path.size(); ++k) {
        const int d = step_dir(s.window, t.path[k], t.path[k + 1]);
        s.traversed_edges.push_back(step_edge(t.path[k], t.path[k + 1], d));
      }
    std::sort(s.traversed_edges.begin(), s.traversed_edges.end());
    s.traversed_edges.erase(std::unique(s.traversed_edges.begin(), s.traversed_edges.end()),
                            s.traversed_edges.end());
  }
}

}  // namespace

double InterlacementSample::occupation_at(Point p) const {
  if (!window.inside(p)) return 0.0;
  const auto i = static_cast<std::uint32_t>(window.index(p));
  auto it = std::lower_bound(occupation.begin(), occupation.end(), i,
                             [](const auto& e, std::uint32_t v) { return e.first < v; });
  return (it != occupation.end() && it->first == i) ? it->second : 0.0;
}

bool InterlacementSample::is_visited(Point p) const {
  return window.inside(p) && sorted_has(visited, static_cast<std::uint32_t>(window.index(p)));
}

bool InterlacementSample::hits(const PointSet& K) const {
  std::vector<std::uint8_t> mask(window.size(), 0);
  for (Point p : K)
    if (window.inside(p)) mask[window.index(p)] = 1;
  for (const auto& t : trajectories)
    for (auto i : t.path)
      if (mask[i]) return true;
  return false;
}

InterlacementSample InterlacementSample::at_level(double u, const SampleOptions& opt) const {
  if (u > level_u) throw DomainError("at_level: level above the sampled level");
  InterlacementSample s;
  s.level_u = u;
  s.window = window;
  s.anchor_set = anchor_set;
  s.key = key;
  s.total_rate = total_rate;
  for (const auto& t : trajectories)
    if (t.label <= u) s.trajectories.push_back(t);
  fill_indices(s, opt);
  return s;
}

InterlacementSampler::InterlacementSampler(const WalkModel& m, const Window& w, PointSet anchor)
    : m_(m), w_(w), anchor_(std::move(anchor)) {
  if (w.size() > UINT32_MAX) throw ResourceError("interlacements: window too large");
  if (anchor_.empty()) {
    anchor_.reserve(w.size());
    for (std::size_t i = 0; i < w.size(); ++i) anchor_.push_back(w.point(i));
    std::sort(anchor_.begin(), anchor_.end());
  }
  in_anchor_.assign(w.size(), 0);
  for (Point p : anchor_) {
    if (!w.inside(p)) throw DomainError("interlacements: anchor set leaves the window");
    in_anchor_[w.index(p)] = 1;
  }
  if (anchor_.size() == w.size()) {
    esc_.assign(w.size(), 0.0);
  } else {
    const auto h = hitting_probability(m, w, anchor_, {}, &residual_);
    esc_.resize(h.size());
    for (std::size_t i = 0; i < h.size(); ++i) esc_[i] = in_anchor_[i] ? 0.0 : std::clamp(1.0 - h[i], 0.0, 1.0);
  }
  e_.resize(anchor_.size());
  anchor_index_.resize(anchor_.size());
  for (std::size_t k = 0; k < anchor_.size(); ++k) {
    const std::size_t i = w.index(anchor_[k]);
    anchor_index_[k] = static_cast<std::uint32_t>(i);
    double v = m.killing_rate;
    for (int d = 0; d < 4; ++d) {
      const std::size_t j = w.neighbor(i, d);
      v += m.edge_conductance * (j == Window::npos ? 1.0 : esc_[j]);
    }
    e_[k] = v;
  }
  cap_ = std::accumulate(e_.begin(), e_.end(), 0.0);
}

std::array<double, 5> InterlacementSampler::backward_first_step_law(Point x) const {
  if (!w_.inside(x) || !in_anchor_[w_.index(x)]) throw DomainError("backward law: x not in the anchor set");
  const std::size_t i = w_.index(x);
  std::array<double, 5> p{};
  double tot = m_.killing_rate;
  for (int d = 0; d < 4; ++d) {
    const std::size_t j = w_.neighbor(i, d);
    p[d] = m_.edge_conductance * (j == Window::npos ? 1.0 : esc_[j]);
    tot += p[d];
  }
  p[4] = m_.killing_rate;
  for (double& v : p) v /= tot;
  return p;
}

void InterlacementSampler::walk_forward(Engine& rng, std::uint32_t x, Trajectory& t) const {
  const double pk = m_.killing_rate / m_.total_rate;
  const int s = w_.side();
  const bool torus = w_.kind() == WindowKind::torus;
  int cx = static_cast<int>(x % s), cy = static_cast<int>(x / s);
  t.path.push_back(x);
  for (;;) {
    const double r = uniform01(rng);
    if (r < pk) {
      t.forward_end = TrajectoryEnd::killed;
      return;
    }
    const int d = std::min(3, static_cast<int>((r - pk) / (1 - pk) * 4));
    cx += kSteps[d].x;
    cy += kSteps[d].y;
    if (cx < 0 || cy < 0 || cx >= s || cy >= s) {
      if (!torus) {
        t.forward_end = TrajectoryEnd::exited;
        return;
      }
      cx = (cx + s) % s;
      cy = (cy + s) % s;
    }
    t.path.push_back(static_cast<std::uint32_t>(cy * s + cx));
  }
}

void InterlacementSampler::walk_backward(Engine& rng, std::uint32_t x, Trajectory& t) const {
  // Doob transform by the escape probability; exiting the window and killing
  // both count as escape.
  std::vector<std::uint32_t> back;
  std::uint32_t y = x;
  bool first = true;
  for (;;) {
    double wt[5];
    std::size_t nb[4];
    double tot = m_.killing_rate;
    for (int d = 0; d < 4; ++d) {
      nb[d] = w_.neighbor(y, d);
      wt[d] = m_.edge_conductance * (nb[d] == Window::npos ? 1.0 : esc_[nb[d]]);
      tot += wt[d];
    }
    wt[4] = m_.killing_rate;
    double r = uniform01(rng) * tot;
    int c = 0;
    while (c < 4 && r >= wt[c]) r -= wt[c++];
    if (first) {
      t.backward_first_step = c;
      first = false;
    }
    if (c == 4) {
      t.backward_end = TrajectoryEnd::killed;
      break;
    }
    if (nb[c] == Window::npos) {
      t.backward_end = TrajectoryEnd::exited;
      break;
    }
    y = static_cast<std::uint32_t>(nb[c]);
    back.push_back(y);
  }
  t.path.assign(back.rbegin(), back.rend());
  t.entrance = t.path.size();
}

InterlacementSample InterlacementSampler::sample(double u, std::uint64_t seed, std::uint64_t index,
                                                 const SampleOptions& opt) const {
  if (!(u > 0)) throw DomainError("interlacements: u must be > 0");
  InterlacementSample s;
  s.level_u = u;
  s.window = w_;
  s.anchor_set = anchor_;
  s.key = stream_key(seed, Stream::trajectories, index);
  s.total_rate = m_.total_rate;
  Engine pe = make_engine(stream_key(seed, Stream::poisson, index));
  std::poisson_distribution<long> pd(u * cap_);
  const long n = pd(pe);
  std::discrete_distribution<std::size_t> start(e_.begin(), e_.end());
  s.trajectories.resize(n);
  for (long j = 0; j < n; ++j) {
    Trajectory& t = s.trajectories[j];
    t.label = u * uniform01(pe);
    const std::uint32_t x = anchor_index_[start(pe)];
    Engine rng = make_engine(stream_key(s.key, 0, static_cast<std::uint64_t>(j)));
    walk_backward(rng, x, t);
    walk_forward(rng, x, t);
  }
  fill_indices(s, opt);
  return s;
}

InterlacementSample sample_interlacement(const WalkModel& m, const Window& w, double u, std::uint64_t seed,
                                         const PointSet& anchor) {
  if (!(u > 0)) throw DomainError("interlacements: u must be > 0");
  return InterlacementSampler(m, w, anchor).sample(u, seed);
}

double locuniq_lambda(int N, int R, double c1) {
  if (N < 1 || R < 1 || !(c1 > 0)) throw DomainError("locuniq_lambda: invalid arguments");
  if (2 * R >= N) return c1;
  const double q = double(N) / R;
  return std::max(q * std::exp(-std::log(q) / c1), 2.0);
}

bool loc_uniq(const InterlacementSample& s, Point x, int R, double lambda) {
  if (R < 1 || !(lambda >= 1)) throw DomainError("loc_uniq: need R >= 1 and lambda >= 1");
  const Window& w = s.window;
  const double big = lambda * R;
  const Point ll = w.lower_left();
  const int ext = static_cast<int>(std::floor(big));
  if (w.kind() == WindowKind::box) {
    if (x.x - ext < ll.x || x.y - ext < ll.y || x.x + ext >= ll.x + w.side() || x.y + ext >= ll.y + w.side())
      throw DomainError("loc_uniq: B(x, lambda R) leaves the window");
  } else if (2 * ext + 1 > w.side()) {
    throw DomainError("loc_uniq: B(x, lambda R) wraps around the torus");
  }
  const PointSet outer = ball(x, big);
  std::vector<std::uint32_t> idx(outer.size());
  for (std::size_t k = 0; k < outer.size(); ++k) idx[k] = static_cast<std::uint32_t>(w.index(outer[k]));
  std::vector<std::uint32_t> order(idx.size());
  std::iota(order.begin(), order.end(), 0u);
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return idx[a] < idx[b]; });
  std::vector<std::uint32_t> sorted_idx(idx.size());
  for (std::size_t k = 0; k < idx.size(); ++k) sorted_idx[k] = idx[order[k]];
  auto local = [&](std::uint32_t i) -> long {
    auto it = std::lower_bound(sorted_idx.begin(), sorted_idx.end(), i);
    return (it != sorted_idx.end() && *it == i) ? it - sorted_idx.begin() : -1;
  };
  std::vector<long> parent(idx.size());
  std::iota(parent.begin(), parent.end(), 0L);
  auto find = [&](long a) {
    while (parent[a] != a) a = parent[a] = parent[parent[a]];
    return a;
  };
  for (std::uint64_t e : s.traversed_edges) {
    const auto a = static_cast<std::uint32_t>(e / 2);
    const std::size_t b = w.neighbor(a, (e % 2) ? 2 : 0);
    if (b == Window::npos) continue;
    const long la = local(a), lb = local(static_cast<std::uint32_t>(b));
    if (la < 0 || lb < 0) continue;
    parent[find(la)] = find(lb);
  }
  long root = -1;
  for (Point p : ball(x, R)) {
    const auto i = static_cast<std::uint32_t>(w.index(p));
    if (!sorted_has(s.visited, i)) continue;
    const long r = find(local(i));
    if (root < 0)
      root = r;
    else if (r != root)
      return false;
  }
  return true;
}

KsResult ks_two_sample(std::vector<double> x, std::vector<double> y) {
  if (x.empty() || y.empty()) throw ValidationError("ks_two_sample: empty sample");
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  const double n1 = x.size(), n2 = y.size();
  std::size_t i = 0, j = 0;
  double d = 0;
  while (i < x.size() && j < y.size()) {
    const double v = std::min(x[i], y[j]);
    while (i < x.size() && x[i] == v) ++i;
    while (j < y.size() && y[j] == v) ++j;
    d = std::max(d, std::abs(i / n1 - j / n2));
  }
  KsResult r;
  r.statistic = d;
  r.n1 = x.size();
  r.n2 = y.size();
  const double ne = n1 * n2 / (n1 + n2);
  r.critical_1pct = 1.62762 / std::sqrt(ne);
  const double lam = (std::sqrt(ne) + 0.12 + 0.11 / std::sqrt(ne)) * d;
  double q = 0;
  for (int k = 1; k <= 100; ++k) {
    const double t = 2 * ((k % 2) ? 1 : -1) * std::exp(-2.0 * k * k * lam * lam);
    q += t;
    if (std::abs(t) < 1e-16) break;
  }
  r.p_value = std::clamp(q, 0.0, 1.0);
  if (lam < 0.2) r.p_value = 1.0;
  return r;
}

IsomorphismTest isomorphism_marginal_test(const WalkModel& m, const Window& w, double a, long n_samples,
                                          std::uint64_t seed, double u) {
  if (n_samples < 1) throw ValidationError("isomorphism test: need samples");
  IsomorphismTest out;
  out.level_u = u >= 0 ? u : a * a / 2;
  const Point o{0, 0};
  if (!w.inside(o)) throw DomainError("isomorphism test: origin outside the window");
  const std::size_t io = w.index(o);
  std::vector<double> f(w.size()), g(w.size());
  std::unique_ptr<FactorizationSampler> fs;
  std::unique_ptr<SpectralSampler> ss;
  if (w.kind() == WindowKind::box)
    fs = std::make_unique<FactorizationSampler>(m, w);
  else
    ss = std::make_unique<SpectralSampler>(m, w);
  const InterlacementSampler is(m, w);
  for (long k = 0; k < n_samples; ++k) {
    if (fs) {
      Engine r1 = make_engine(stream_key(seed, Stream::marginal, 2 * k));
      Engine r2 = make_engine(stream_key(seed, Stream::marginal, 2 * k + 1));
      fs->sample(r1, f);
      fs->sample(r2, g);
    } else {
      ss->sample_pair(stream_key(seed, Stream::marginal, k), f, g);
    }
    double l0 = 0;
    if (out.level_u > 0) l0 = is.sample(out.level_u, seed, static_cast<std::uint64_t>(k)).occupation_at(o);
    out.lhs.push_back(2 * l0 + f[io] * f[io]);
    out.rhs.push_back((g[io] + a) * (g[io] + a));
  }
  out.mean_lhs = std::accumulate(out.lhs.begin(), out.lhs.end(), 0.0) / n_samples;
  out.mean_rhs = std::accumulate(out.rhs.begin(), out.rhs.end(), 0.0) / n_samples;
  out.ks = ks_two_sample(out.lhs, out.rhs);
  return out;
}

VacancyEstimate vacancy_experiment(const InterlacementSampler& s, const PointSet& K, double cap_K, double u,
                                   long samples, std::uint64_t seed) {
  if (samples < 1) throw ValidationError("vacancy: need samples");
  VacancyEstimate v;
  v.u = u;
  v.cap_K = cap_K;
  v.expected = std::exp(-u * cap_K);
  v.expected_count = u * s.cap();
  v.samples = samples;
  long miss = 0;
  double c1 = 0, c2 = 0;
  const SampleOptions none{false, false};
  for (long k = 0; k < samples; ++k) {
    const auto smp = s.sample(u, seed, static_cast<std::uint64_t>(k), none);
    miss += !smp.hits(K);
    const double c = static_cast<double>(smp.trajectories.size());
    c1 += c;
    c2 += c * c;
  }
  v.p_hat = double(miss) / samples;
  v.std_error = std::sqrt(v.p_hat * (1 - v.p_hat) / samples);
  v.mean_count = c1 / samples;
  v.count_std_error = std::sqrt(std::max(0.0, c2 / samples - v.mean_count * v.mean_count) / samples);
  return v;
}

}  // namespace gff2d
