#include "gff2d/cable_percolation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <deque>
#include <json.hpp>
#include <map>
#include <numeric>
#include <sstream>
#include <thread>

#include "gff2d/continuum_capacity.hpp"
#include "gff2d/digest.hpp"
#include "gff2d/errors.hpp"
#include "gff2d/potential.hpp"

namespace gff2d {

double open_edge_prob(double u, double v, double conductance) {
  if (u < 0 || v < 0) return 0.0;
  return -std::expm1(-2 * conductance * u * v);
}

namespace {

struct UnionFind {
  std::vector<std::int32_t> parent;
  explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  std::int32_t find(std::int32_t x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  }
  void unite(std::int32_t a, std::int32_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (a < b) std::swap(a, b);
    parent[a] = b;
  }
};

constexpr double kCable = 0.25;

}  // namespace

ClusterLabeling percolate_with_key(const Window& w, std::span<const double> values, double abar,
                                   std::uint64_t edge_key) {
  const std::size_t n = w.size();
  if (values.size() != n) throw DomainError("percolate: field size differs from window");
  if (n > static_cast<std::size_t>(INT32_MAX)) throw ResourceError("percolate: window too large");
  ClusterLabeling c{w, std::vector<std::int32_t>(n, -1), std::vector<std::uint8_t>(n, 0)};
  UnionFind uf(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(values[i] >= abar)) continue;
    for (int b = 0; b < 2; ++b) {
      const std::size_t j = w.neighbor(i, b == 0 ? 0 : 2);
      if (j == Window::npos || !(values[j] >= abar)) continue;
      const double p = open_edge_prob(values[i] - abar, values[j] - abar, kCable);
      if (hash_uniform(edge_key, edge_id(i, b)) < p) {
        c.open[i] |= static_cast<std::uint8_t>(1u << b);
        uf.unite(static_cast<std::int32_t>(i), static_cast<std::int32_t>(j));
      }
    }
  }
  // union by smaller index keeps every root at the component minimum
  for (std::size_t i = 0; i < n; ++i)
    if (values[i] >= abar) c.label[i] = uf.find(static_cast<std::int32_t>(i));
  return c;
}

ClusterLabeling percolate(const Field& field, double abar, std::uint64_t seed) {
  if (!(abar >= 0)) throw DomainError("percolate: level must be >= 0");
  return percolate_with_key(field.window, field.values, abar, stream_key(seed, Stream::edges));
}

namespace {
void check_radius(const Window& w, int R) {
  if (R < 1) throw DomainError("one_arm: R must be >= 1");
  if (!w.inside({0, 0})) throw DomainError("one_arm: origin outside window");
  const Point o = w.lower_left();
  const int reach = std::min({-o.x, -o.y, o.x + w.side() - 1, o.y + w.side() - 1});
  if (R + 1 > reach) throw DomainError("one_arm: R exceeds the evaluation box");
}
}  // namespace

bool one_arm(const ClusterLabeling& c, int R) {
  check_radius(c.window, R);
  const std::int32_t l0 = c.at({0, 0});
  if (l0 < 0) return false;
  const long long r2 = static_cast<long long>(R) * R, r12 = static_cast<long long>(R + 1) * (R + 1);
  for (int y = -R - 1; y <= R + 1; ++y)
    for (int x = -R - 1; x <= R + 1; ++x) {
      const long long d = norm2({x, y});
      if (d >= r2 && d < r12 && c.at({x, y}) == l0) return true;
    }
  return false;
}

bool one_arm_search(const Window& w, std::span<const double> values, double abar,
                    std::uint64_t edge_key, int R) {
  check_radius(w, R);
  if (!(values[w.index({0, 0})] >= abar)) return false;
  const int m = 2 * R + 3;
  std::vector<std::uint8_t> seen(static_cast<std::size_t>(m) * m, 0);
  auto local = [R, m](Point p) { return static_cast<std::size_t>(p.y + R + 1) * m + (p.x + R + 1); };
  const long long r2 = static_cast<long long>(R) * R;
  std::vector<Point> stack{{0, 0}};
  seen[local({0, 0})] = 1;
  while (!stack.empty()) {
    const Point p = stack.back();
    stack.pop_back();
    const std::size_t ip = w.index(p);
    for (int d = 0; d < 4; ++d) {
      const Point q = p + kSteps[d];
      if (seen[local(q)]) continue;
      const std::size_t iq = w.index(q);
      if (!(values[iq] >= abar)) continue;
      const std::uint64_t id = (d == 0) ? edge_id(ip, 0) : (d == 1) ? edge_id(iq, 0)
                             : (d == 2) ? edge_id(ip, 1) : edge_id(iq, 1);
      const double pr = open_edge_prob(values[ip] - abar, values[iq] - abar, kCable);
      if (!(hash_uniform(edge_key, id) < pr)) continue;
      if (norm2(q) >= r2) return true;
      seen[local(q)] = 1;
      stack.push_back(q);
    }
  }
  return false;
}

int fft_friendly_size(int n) {
  for (int s = std::max(n, 1);; ++s) {
    int r = s;
    for (int p : {2, 3, 5, 7})
      while (r % p == 0) r /= p;
    if (r == 1) return s;
  }
}

int effective_radius(const LevelSetConfig& c) { return c.radius_R > 0 ? c.radius_R : c.N; }

Window theta_window(const LevelSetConfig& c) {
  return Window::torus(fft_friendly_size(std::max(16, c.side_factor * std::max(c.N, effective_radius(c)))));
}

void validate(const LevelSetConfig& c) {
  if (c.N < 1) throw ValidationError("N must be >= 1");
  if (c.samples < 1) throw ValidationError("samples must be >= 1");
  if (c.side_factor < 1) throw ValidationError("side_factor must be >= 1");
  if (!(c.eval_fraction > 0 && c.eval_fraction <= 0.25)) throw ValidationError("eval_fraction must lie in (0, 1/4]");
  const int R = effective_radius(c);
  if (R < 1) throw ValidationError("R must be >= 1");
  const Window w = theta_window(c);
  if (R > c.eval_fraction * w.side())
    throw ValidationError("R = " + std::to_string(R) + " exceeds the evaluation box of the side-" +
                          std::to_string(w.side()) + " torus");
}

std::string config_digest(const LevelSetConfig& c) {
  nlohmann::json j;
  j["level_abar"] = c.level_abar;
  j["N"] = c.N;
  j["R"] = effective_radius(c);
  j["side"] = theta_window(c).side();
  j["samples"] = c.samples;
  j["seed"] = c.seed;
  j["sampler"] = "spectral-pair";
  return sha256_hex(j.dump());
}

int default_workers() {
  if (const char* e = std::getenv("GFF2D_WORKERS"); e && *e) {
    const int v = std::atoi(e);
    if (v >= 1) return v;
  }
  return 1;
}

namespace {

ThetaEstimate make_estimate(double level, long hits, long n, std::string digest) {
  ThetaEstimate t;
  t.level_abar = level;
  t.hits = hits;
  t.n_samples = n;
  t.p_hat = double(hits) / n;
  t.std_error = std::sqrt(t.p_hat * (1 - t.p_hat) / n);
  t.digest = std::move(digest);
  return t;
}

// Runs every sample index through fn(k, field) with fields drawn in pairs
// from one complex FFT; sample k is fixed by (seed, k) whatever the worker
// count.
template <class Fn>
void for_each_field(const WalkModel& m, const Window& w, std::uint64_t seed, long samples, int workers,
                    Fn&& fn) {
  const long pairs = (samples + 1) / 2;
  workers = std::max(1, std::min<int>(workers, static_cast<int>(pairs)));
  auto run = [&](int id) {
    SpectralSampler s(m, w);
    std::vector<double> a(w.size()), b(w.size());
    for (long j = id; j < pairs; j += workers) {
      s.sample_pair(stream_key(seed, Stream::field, static_cast<std::uint64_t>(j)), a, b);
      fn(2 * j, a);
      if (2 * j + 1 < samples) fn(2 * j + 1, b);
    }
  };
  if (workers == 1) {
    run(0);
    return;
  }
  std::vector<std::thread> th;
  std::exception_ptr err;
  std::mutex mu;
  for (int i = 0; i < workers; ++i)
    th.emplace_back([&, i] {
      try {
        run(i);
      } catch (...) {
        std::lock_guard<std::mutex> lk(mu);
        if (!err) err = std::current_exception();
      }
    });
  for (auto& t : th) t.join();
  if (err) std::rethrow_exception(err);
}

}  // namespace

CoupledTheta estimate_theta_coupled(const LevelSetConfig& base, const std::vector<double>& levels) {
  validate(base);
  if (levels.empty()) throw ValidationError("no levels given");
  const WalkModel m(base.N);
  const Window w = theta_window(base);
  const int R = effective_radius(base);
  const int workers = base.workers > 0 ? base.workers : default_workers();
  std::vector<double> lv;
  for (double l : levels) lv.push_back(std::abs(l));  // theta is symmetric in the level
  CoupledTheta out;
  out.indicators.assign(lv.size(), std::vector<std::uint8_t>(base.samples, 0));
  for_each_field(m, w, base.seed, base.samples, workers, [&](long k, const std::vector<double>& f) {
    const std::uint64_t ek = stream_key(base.seed, Stream::edges, static_cast<std::uint64_t>(k));
    for (std::size_t i = 0; i < lv.size(); ++i) out.indicators[i][k] = one_arm_search(w, f, lv[i], ek, R);
  });
  for (std::size_t i = 0; i < lv.size(); ++i) {
    LevelSetConfig c = base;
    c.level_abar = lv[i];
    const long hits = std::accumulate(out.indicators[i].begin(), out.indicators[i].end(), 0L);
    out.estimates.push_back(make_estimate(lv[i], hits, base.samples, config_digest(c)));
  }
  for (std::size_t i = 0; i < lv.size(); ++i)
    for (std::size_t j = 0; j < lv.size(); ++j)
      if (lv[i] < lv[j])
        for (long k = 0; k < base.samples; ++k)
          if (out.indicators[j][k] > out.indicators[i][k]) out.dominance_ok = false;
  return out;
}

ThetaEstimate estimate_theta(const LevelSetConfig& c) {
  return estimate_theta_coupled(c, {c.level_abar}).estimates.front();
}

std::vector<ScalingRow> scaling_experiment(const std::vector<ScalingPoint>& grid, const ScalingOptions& o) {
  if (grid.empty()) return {};
  const double tau = o.tau > 0 ? o.tau : tau_reference();
  const long samples_xi = o.samples_xi > 0 ? o.samples_xi : o.samples;
  std::vector<ScalingRow> rows(grid.size());
  std::map<int, std::vector<std::size_t>> by_n;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!(grid[i].a > -1 && grid[i].a < 1)) throw DomainError("scaling: a must lie in (-1,1)");
    by_n[grid[i].N].push_back(i);
  }
  std::map<int, ThetaEstimate> critical;  // theta(0, n) by n
  for (const auto& [N, idx] : by_n) {
    LevelSetConfig c;
    c.N = N;
    c.samples = o.samples;
    c.seed = stream_key(o.seed, 0x5ca1e, static_cast<std::uint64_t>(N));
    c.side_factor = o.side_factor;
    c.eval_fraction = o.eval_fraction;
    c.workers = o.workers;
    const Window w = theta_window(c);
    std::vector<double> levels{0.0};
    for (std::size_t i : idx) {
      const auto cs = correlation_scale(grid[i].a, N, w);
      ScalingRow& r = rows[i];
      r.a = grid[i].a;
      r.N = N;
      r.g_N = cs.g_N;
      r.xi = cs.xi;
      r.xi_rounded = std::max(1, static_cast<int>(std::lround(cs.xi)));
      r.abar = std::abs(cs.abar);
      r.log_N_over_xi = std::log(N / cs.xi);
      r.predicted = -tau * r.log_N_over_xi;
      levels.push_back(r.abar);
    }
    if (o.progress) o.progress("theta levels at N=" + std::to_string(N));
    const auto ct = estimate_theta_coupled(c, levels);
    critical[N] = ct.estimates[0];
    for (std::size_t k = 0; k < idx.size(); ++k) rows[idx[k]].theta_abar = ct.estimates[k + 1];
  }
  for (auto& r : rows) {
    const int x = r.xi_rounded;
    if (!critical.count(x)) {
      LevelSetConfig c;
      c.N = x;
      c.samples = samples_xi;
      c.seed = stream_key(o.seed, 0x5ca1e, static_cast<std::uint64_t>(x));
      c.side_factor = o.side_factor;
      c.eval_fraction = o.eval_fraction;
      c.workers = o.workers;
      if (o.progress) o.progress("theta(0, " + std::to_string(x) + ")");
      critical[x] = estimate_theta(c);
    }
    r.theta_xi = critical[x];
    const double p1 = r.theta_abar.p_hat, p2 = r.theta_xi.p_hat;
    if (p1 > 0 && p2 > 0) {
      r.log_ratio = std::log(p1 / p2);
      r.log_ratio_se = std::sqrt(std::pow(r.theta_abar.std_error / p1, 2) + std::pow(r.theta_xi.std_error / p2, 2));
    } else {
      r.log_ratio = std::nan("");
      r.log_ratio_se = std::nan("");
    }
  }
  return rows;
}

std::vector<std::string> scaling_columns() {
  return {"a", "N", "g_N", "xi", "xi_rounded", "abar", "theta_abar_N", "theta_abar_N_se", "theta_0_xi",
          "theta_0_xi_se", "log_ratio", "log_ratio_se", "log_N_over_xi", "minus_tau_log_N_over_xi",
          "samples_abar", "samples_xi"};
}

std::vector<std::string> scaling_row_cells(const ScalingRow& r) {
  auto f = [](double v) {
    if (std::isnan(v)) return std::string("nan");
    std::ostringstream s;
    s.precision(10);
    s << v;
    return s.str();
  };
  return {f(r.a), std::to_string(r.N), f(r.g_N), f(r.xi), std::to_string(r.xi_rounded), f(r.abar),
          f(r.theta_abar.p_hat), f(r.theta_abar.std_error), f(r.theta_xi.p_hat), f(r.theta_xi.std_error),
          f(r.log_ratio), f(r.log_ratio_se), f(r.log_N_over_xi), f(r.predicted),
          std::to_string(r.theta_abar.n_samples), std::to_string(r.theta_xi.n_samples)};
}

}  // namespace gff2d
