#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "gff2d/gff_sampler.hpp"
#include "gff2d/lattice.hpp"

namespace gff2d {

/// Probability that the cable between two vertices with field excesses u, v
/// above the level stays above it: 1 - exp(-2 C u v) for u, v >= 0.
double open_edge_prob(double u, double v, double conductance);

/// Uniform attached to edge (site i, direction d in {0: +x, 1: +y}).
inline std::uint64_t edge_id(std::size_t site, int dir) { return 2 * static_cast<std::uint64_t>(site) + dir; }

struct ClusterLabeling {
  Window window;
  std::vector<std::int32_t> label;   // -1 for vertices below the level
  std::vector<std::uint8_t> open;    // bit 0: edge to +x, bit 1: edge to +y
  /// Label of the vertex at p, or -1.
  std::int32_t at(Point p) const { return label[window.index(p)]; }
};

/// Marks vertices with field >= abar, opens each edge between marked
/// vertices with the cable law using hashed uniforms keyed by edge_key, and
/// labels components with union-find. Labels are the smallest site index in
/// the component.
ClusterLabeling percolate(const Field& field, double abar, std::uint64_t seed);
ClusterLabeling percolate_with_key(const Window& w, std::span<const double> values, double abar,
                                   std::uint64_t edge_key);

/// True iff the origin is marked and its cluster meets {R <= |x| < R+1}.
bool one_arm(const ClusterLabeling& c, int R);

/// Same event evaluated by a breadth-first search from the origin that only
/// explores |x| < R; edges are opened lazily with the same hashed uniforms.
bool one_arm_search(const Window& w, std::span<const double> values, double abar,
                    std::uint64_t edge_key, int R);

struct LevelSetConfig {
  double level_abar = 0;
  int N = 64;
  int radius_R = 0;  // 0 means N
  int side_factor = 8;
  /// R must not exceed eval_fraction * side (1/8 keeps the one-arm ball in
  /// the central box of side side/4).
  double eval_fraction = 0.125;
  long samples = 1000;
  std::uint64_t seed = 1;
  int workers = 0;  // 0: GFF2D_WORKERS or 1
};

struct ThetaEstimate {
  double level_abar = 0;
  double p_hat = 0;
  double std_error = 0;
  long n_samples = 0;
  long hits = 0;
  std::string digest;
};

/// Smallest size >= n whose prime factors are 2, 3, 5, 7.
int fft_friendly_size(int n);
/// Torus used for mass scale N with the configured side factor.
Window theta_window(const LevelSetConfig& c);
int effective_radius(const LevelSetConfig& c);
void validate(const LevelSetConfig& c);
/// Stable digest of the configuration (hex SHA-256 of its canonical JSON).
std::string config_digest(const LevelSetConfig& c);

ThetaEstimate estimate_theta(const LevelSetConfig& c);

struct CoupledTheta {
  std::vector<ThetaEstimate> estimates;               // per level, in input order
  std::vector<std::vector<std::uint8_t>> indicators;  // [level][sample]
  bool dominance_ok = true;  // per-sample monotonicity across levels
};

/// All levels share fields and edge uniforms sample by sample.
CoupledTheta estimate_theta_coupled(const LevelSetConfig& base, const std::vector<double>& levels);

struct ScalingPoint {
  double a;
  int N;
};

struct ScalingRow {
  double a = 0;
  int N = 0;
  double g_N = 0;
  double xi = 0;
  int xi_rounded = 0;
  double abar = 0;
  ThetaEstimate theta_abar;
  ThetaEstimate theta_xi;
  double log_ratio = 0;
  double log_ratio_se = 0;
  double log_N_over_xi = 0;
  double predicted = 0;  // -tau log(N / xi)
};

struct ScalingOptions {
  long samples = 1000;
  long samples_xi = 0;  // companion runs; 0 means samples
  std::uint64_t seed = 1;
  int side_factor = 8;
  double eval_fraction = 0.125;
  int workers = 0;
  double tau = 0;  // 0 means tau_reference()
  std::function<void(const std::string&)> progress;
};

std::vector<ScalingRow> scaling_experiment(const std::vector<ScalingPoint>& grid, const ScalingOptions& o);

/// Column names of the scaling table, in output order.
std::vector<std::string> scaling_columns();
std::vector<std::string> scaling_row_cells(const ScalingRow& r);

/// Worker count from GFF2D_WORKERS (default 1).
int default_workers();

}  // namespace gff2d
