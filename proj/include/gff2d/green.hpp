#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "gff2d/lattice.hpp"

namespace gff2d {

/// Applies Q = total_rate * I - edge_conductance * A on the window (zero
/// exterior for boxes, periodic for tori).
void apply_operator(const WalkModel& m, const Window& w, std::span<const double> u,
                    std::span<double> out);

/// Exact inverse of Q on a whole window, diagonalised by a sine transform
/// (box) or a Fourier transform (torus).
class SpectralSolver {
 public:
  SpectralSolver(const WalkModel& m, const Window& w);
  ~SpectralSolver();
  SpectralSolver(const SpectralSolver&) = delete;
  SpectralSolver& operator=(const SpectralSolver&) = delete;

  /// u = Q^{-1} f. Thread-safe; concurrent calls are serialised.
  void solve(std::span<const double> f, std::span<double> u) const;
  /// Eigenvalue of Q for mode (k1, k2); used by the spectral sampler.
  double symbol(int k1, int k2) const;
  const WalkModel& model() const { return model_; }
  const Window& window() const { return window_; }

 private:
  WalkModel model_;
  Window window_;
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Translation-invariant Green function of a torus, g(x - y).
class TorusGreenTable {
 public:
  TorusGreenTable(const WalkModel& m, int side);
  double operator()(int dx, int dy) const;
  int side() const { return side_; }
  double residual() const { return residual_; }

 private:
  int side_;
  std::vector<double> table_;
  double residual_;
};

/// Green function of the killed walk on all of Z^2, by one-dimensional
/// quadrature of its Fourier representation. Values are memoised.
class PlaneGreen {
 public:
  explicit PlaneGreen(const WalkModel& m);
  double operator()(int dx, int dy) const;
  const WalkModel& model() const { return model_; }

 private:
  double compute(int a, int b) const;
  WalkModel model_;
  mutable std::mutex mu_;
  mutable std::unordered_map<long long, double> cache_;
};

/// Shared, cached plane Green function for mass scale N.
std::shared_ptr<const PlaneGreen> plane_green(int N);
/// Shared, cached torus table.
std::shared_ptr<const TorusGreenTable> torus_green(const WalkModel& m, int side);

using GreenKernel = std::function<double(int dx, int dy)>;

enum class SolverMethod { spectral, direct, pcg };
std::string to_string(SolverMethod s);

struct SolverOptions {
  std::size_t direct_limit = 160000;  // free sites handled by sparse Cholesky
  double tolerance = 1e-12;           // PCG target relative residual
  int max_iterations = 5000;
  bool force_iterative = false;
};

struct DirichletResult {
  std::vector<double> u;  // full window vector, pinned values included
  double residual = 0;    // relative residual of Q u = f on the free sites
  int iterations = 0;
  SolverMethod method = SolverMethod::direct;
};

/// Solves Q u = f off a pinned set P, u = prescribed values on P. For box
/// windows u vanishes outside the window.
class DirichletSolver {
 public:
  DirichletSolver(const WalkModel& m, const Window& w, std::vector<char> pinned,
                  SolverOptions opt = {});
  ~DirichletSolver();
  DirichletSolver(DirichletSolver&&) noexcept;

  /// source and pinned_values are full window vectors (entries off their
  /// respective sets are ignored). Either may be empty, meaning zero.
  DirichletResult solve(std::span<const double> source, std::span<const double> pinned_values) const;
  SolverMethod method() const;
  std::size_t free_count() const;
  const std::vector<char>& pinned() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Relative residual of Q u = f on the free sites.
double dirichlet_residual(const WalkModel& m, const Window& w, const std::vector<char>& pinned,
                          std::span<const double> u, std::span<const double> f);

/// g(x,y) on the window (absorbing exterior for boxes).
double green(const WalkModel& m, const Window& w, Point x, Point y);
/// Column g(., y) over the whole window; residual of the solve reported.
std::vector<double> green_column(const WalkModel& m, const Window& w, Point y,
                                 double* residual = nullptr);
/// Green function killed on U.
double green_killed(const WalkModel& m, const Window& w, const PointSet& U, Point x, Point y);
std::vector<double> green_killed_column(const WalkModel& m, const Window& w, const PointSet& U,
                                        Point y, double* residual = nullptr);

/// Residual contract for all solves.
inline constexpr double kSolveResidual = 1e-10;

}  // namespace gff2d
