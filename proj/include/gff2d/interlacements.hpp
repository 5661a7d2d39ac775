#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "gff2d/lattice.hpp"
#include "gff2d/rng.hpp"

namespace gff2d {

/// How a trajectory end terminates: killed at rate kappa, or by stepping
/// out of a box window.
enum class TrajectoryEnd : std::uint8_t { killed, exited };

struct Trajectory {
  double label = 0;                 // uniform in [0, u]
  std::vector<std::uint32_t> path;  // site indices in time order
  std::size_t entrance = 0;         // position in path of the first visit to the anchor set
  TrajectoryEnd backward_end = TrajectoryEnd::killed;
  TrajectoryEnd forward_end = TrajectoryEnd::killed;
  int backward_first_step = -1;     // direction 0..3 of the first backward step, 4 for killing
};

struct SampleOptions {
  bool occupation = true;  // fill InterlacementSample::occupation
  bool edges = true;       // fill InterlacementSample::traversed_edges
};

struct InterlacementSample {
  double level_u = 0;
  Window window = Window::torus(4);
  PointSet anchor_set;
  std::vector<Trajectory> trajectories;
  std::vector<std::uint32_t> visited;                          // sorted site indices
  std::vector<std::pair<std::uint32_t, double>> occupation;    // sorted by site, only visited sites
  std::vector<std::uint64_t> traversed_edges;                  // sorted edge ids, see edge_id()
  std::uint64_t key = 0;
  double total_rate = 1;  // lambda of the walk model

  double occupation_at(Point p) const;
  bool is_visited(Point p) const;
  bool hits(const PointSet& K) const;
  /// The sub-sample of trajectories with label <= u (shared Poisson thinning).
  /// Occupation times are redrawn per trajectory, so they are not coupled.
  InterlacementSample at_level(double u, const SampleOptions& opt = {}) const;
};

/// Interlacements of the walk killed at rate N^-2 and upon leaving a box
/// window (the torus only kills at rate N^-2). Trajectories are recorded
/// from their first entrance into the anchor set, which defaults to the
/// whole window; the backward part is the walk conditioned never to return
/// to the anchor set.
class InterlacementSampler {
 public:
  InterlacementSampler(const WalkModel& m, const Window& w, PointSet anchor = {});

  const WalkModel& model() const { return m_; }
  const Window& window() const { return w_; }
  const PointSet& anchor() const { return anchor_; }
  /// Capacity of the anchor set relative to the killing outside the window.
  double cap() const { return cap_; }
  const std::vector<double>& equilibrium_weights() const { return e_; }
  /// P_y(never reach the anchor set) over the window.
  const std::vector<double>& escape() const { return esc_; }
  double solve_residual() const { return residual_; }

  /// Law of the first backward step from x in the anchor set: entries 0..3
  /// are the directions of kSteps, entry 4 is killing.
  std::array<double, 5> backward_first_step_law(Point x) const;

  InterlacementSample sample(double u, std::uint64_t seed, std::uint64_t index = 0,
                             const SampleOptions& opt = {}) const;

 private:
  void walk_forward(Engine& rng, std::uint32_t x, Trajectory& t) const;
  void walk_backward(Engine& rng, std::uint32_t x, Trajectory& t) const;

  WalkModel m_;
  Window w_;
  PointSet anchor_;
  std::vector<std::uint8_t> in_anchor_;
  std::vector<double> esc_;
  std::vector<double> e_;  // aligned with anchor_
  std::vector<std::uint32_t> anchor_index_;
  double cap_ = 0;
  double residual_ = 0;
};

/// One-shot convenience wrapper.
InterlacementSample sample_interlacement(const WalkModel& m, const Window& w, double u, std::uint64_t seed,
                                         const PointSet& anchor = {});

/// Default lambda for the local uniqueness event: c1 if 2R >= N, otherwise
/// max((N/R) exp(-log(N/R)/c1), 2).
double locuniq_lambda(int N, int R, double c1 = 1.0);

/// True iff all visited vertices of B(x,R) are connected through traversed
/// edges with both endpoints in B(x, lambda R).
bool loc_uniq(const InterlacementSample& s, Point x, int R, double lambda);

struct KsResult {
  double statistic = 0;
  double critical_1pct = 0;
  double p_value = 0;
  long n1 = 0, n2 = 0;
  bool passes() const { return statistic < critical_1pct; }
};

/// Two-sample Kolmogorov-Smirnov statistic with the asymptotic p-value.
KsResult ks_two_sample(std::vector<double> x, std::vector<double> y);

struct IsomorphismTest {
  KsResult ks;
  double level_u = 0;
  double mean_lhs = 0, mean_rhs = 0;
  std::vector<double> lhs;  // 2 l_0 + phi_0^2
  std::vector<double> rhs;  // (phi_0 + a)^2
};

/// Compares 2 l_0^u + phi_0^2 (independent field and interlacement at level
/// u, which defaults to a^2/2) with (phi_0 + a)^2 on the window.
IsomorphismTest isomorphism_marginal_test(const WalkModel& m, const Window& w, double a, long n_samples,
                                          std::uint64_t seed, double u = -1);

struct VacancyEstimate {
  double u = 0;
  double cap_K = 0;
  double expected = 0;  // exp(-u cap(K))
  double p_hat = 0, std_error = 0;
  double mean_count = 0, count_std_error = 0, expected_count = 0;
  long samples = 0;
};

/// Empirical P(I^u misses K) and the mean number of trajectories.
VacancyEstimate vacancy_experiment(const InterlacementSampler& s, const PointSet& K, double cap_K, double u,
                                   long samples, std::uint64_t seed);

}  // namespace gff2d
