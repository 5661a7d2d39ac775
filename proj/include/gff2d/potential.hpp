#pragma once

#include <optional>
#include <vector>

#include "gff2d/green.hpp"
#include "gff2d/lattice.hpp"

namespace gff2d {

struct EquilibriumMeasure {
  PointSet support;
  std::vector<double> weights;  // aligned with support
  double cap = 0;
  std::optional<PointSet> killing_set;
  double residual = 0;  // residual of the underlying solve
};

/// h(x) = P_x(H_K < H_U and before killing) over the window.
std::vector<double> hitting_probability(const WalkModel& m, const Window& w, const PointSet& K,
                                        const PointSet& U = {}, double* residual = nullptr);

/// e_K(x) = (Q h)(x) on K, i.e. killing rate plus conductance times the
/// neighbours' escape probabilities.
EquilibriumMeasure equilibrium_measure(const WalkModel& m, const Window& w, const PointSet& K,
                                       const PointSet& U = {});

/// Equilibrium measure for a translation-invariant Green function (the
/// plane or a torus). Interior points of K carry exactly the killing rate;
/// the boundary weights solve a dense symmetric system.
EquilibriumMeasure equilibrium_measure(const WalkModel& m, const GreenKernel& g, const PointSet& K);

/// Capacity of K in Z^2 (plane Green function).
double plane_capacity(int N, const PointSet& K);

/// <mu, G mu> for a measure on K.
double green_energy(const GreenKernel& g, const PointSet& K, const std::vector<double>& mu);

struct CorrelationScale {
  double a;
  int N;
  double g_N;
  double xi;
  double abar;
};

CorrelationScale correlation_scale(double a, int N, const Window& w);

}  // namespace gff2d
