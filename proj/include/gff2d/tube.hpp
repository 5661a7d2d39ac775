#pragma once

#include <vector>

#include "gff2d/lattice.hpp"

namespace gff2d {

enum class TubeShape { segments, boxes };
enum class TubeHypothesis { separation, diameter };

/// P blocks of length N/P laid along the horizontal segment [-N/2, N/2);
/// the blocks indexed by A are occupied by a set S_i.
struct Tube {
  int N = 0;
  int P = 0;
  TubeShape shape = TubeShape::segments;
  double scale = 1;
  std::vector<int> indices;     // A, increasing, 1-based
  std::vector<PointSet> parts;  // S_i for i in A, aligned with indices
  /// Smallest delta with d(S_i,S_j) >= (|i-j| - delta) N/P for all pairs.
  double separation_delta = 0;
  /// Smallest 1/delta with |x1 - x2| <= (|i-j| + 1/delta) N/P for all pairs.
  double diameter_inverse_delta = 0;
};

/// Builds the tube and reports both spacing parameters. The requested
/// hypothesis must hold with some delta in (0,1); otherwise ValidationError.
Tube build_tube(int N, int P, std::vector<int> A, TubeShape shape, double scale,
                TubeHypothesis hypothesis = TubeHypothesis::separation);

PointSet tube_union(const Tube& t);

/// Exhaustive O(|S_i||S_j|) versions of the two spacing parameters.
double separation_delta_bruteforce(const Tube& t);
double diameter_inverse_delta_bruteforce(const Tube& t);

}  // namespace gff2d
