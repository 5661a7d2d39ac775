#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gff2d/lattice.hpp"

namespace gff2d {

using Path = std::vector<Point>;

/// Spacing of the renormalised lattice Lambda(r) = (floor(r / sqrt 2) v 1) Z^2.
int lambda_spacing(double r);
bool on_lambda(Point p, double r);

struct CoarseGrainScales {
  int L = 1;
  int M = 100;
  int k = 0;
  std::vector<double> L_seq;  // L_0 .. L_k
  std::vector<double> l_seq;  // l_0 .. l_k
  double R = 0;               // peel radius
  double n = 0;               // N / (M L), 0 until a mass scale is attached
  int P = 0;                  // floor(N / (5 R))
  double C_measured = 0;      // max_j L_j / (L M 2^j)
};

/// Scale recursion L_0 = 10 L M, l_j = L_j / (j+1)^2, L_{j+1} = 2 (L_j + 10 l_j),
/// with k >= 1 the largest index such that L_k lies in [R/200, R/4].
CoarseGrainScales make_scales(int L, int M, double target_R);

/// n, the default peel radius M L log n and P for mass scale N.
double default_peel_radius(int N, int L, int M);

struct TreeEmbedding {
  int k = 0;
  Point root;
  /// tau by heap index: the string sigma of length d with binary value v sits
  /// at (1 << d) - 1 + v, the first character being the most significant bit.
  std::vector<Point> tau;
  /// For each leaf (in order of v), the path vertex chosen in C^{l_0}_{tau}.
  std::vector<Point> leaf_points;
  std::vector<std::size_t> leaf_positions;  // positions in the input path
  std::size_t path_end = 0;  // length of the prefix used (first exit from D^{L_k})
};

inline std::size_t tree_index(int depth, std::uint64_t v) { return ((std::size_t{1} << depth) - 1) + v; }

/// Recursive construction: split the path at its last visit to C^{L_j}, pick
/// the lexicographically first admissible point of Lambda(l_{j-1}) for each
/// half, recurse. Throws ValidationError naming the failing segment.
TreeEmbedding embed_tree(const Path& path, Point x, const CoarseGrainScales& s);

struct EmbeddingReport {
  long position_violations = 0;     // placement of children
  long separation_violations = 0;   // same-depth distance lower bound
  long nesting_violations = 0;      // D^{L_{k-n}}_{tau(sigma)} meets D^{L_0} of descendants
  long leaf_violations = 0;         // leaf balls meet the path
  long pairs_checked = 0;
  long total() const { return position_violations + separation_violations + nesting_violations + leaf_violations; }
};

EmbeddingReport verify_embedding(const TreeEmbedding& t, const Path& path, const CoarseGrainScales& s);

struct CoarseGrainOptions {
  double peel_radius = 0;       // 0: M L log n
  double exclusion_radius = 0;  // drop parts whose boxes meet B(x, exclusion_radius)
};

struct CoarseGrainResult {
  Point x;
  int N = 0;
  CoarseGrainScales scales;
  std::vector<Point> collection;            // union of the parts, sorted
  std::vector<std::vector<Point>> parts;    // C_i, i = 1..P (empty if excluded)
  std::vector<Point> anchors;               // x_i
  std::vector<std::size_t> anchor_positions;
  std::vector<TreeEmbedding> trees;
  int excluded_parts = 0;
  std::string path_digest;
};

CoarseGrainResult coarse_grain_path(const Path& path, Point x, int N, int L, int M,
                                    const CoarseGrainOptions& opt = {});

struct CoarseGrainReport {
  EmbeddingReport embedding;
  long subset_violations = 0;     // points of the collection off the path
  long spacing_violations = 0;    // pairs closer than 16 M L
  long anchoring_violations = 0;  // d(y, B(x,L)) < (5i-4) R for y in Sigma(C_i)
  long exclusion_violations = 0;
  long lattice_violations = 0;    // points off Lambda(L) or outside B(x,N)
  std::size_t size = 0;
  long total() const {
    return embedding.total() + subset_violations + spacing_violations + anchoring_violations +
           exclusion_violations + lattice_violations;
  }
};

CoarseGrainReport verify_coarse_grain(const CoarseGrainResult& r, const Path& path,
                                      const CoarseGrainOptions& opt = {});

/// Sigma(C): union of the balls C^L_y.
PointSet box_union(const std::vector<Point>& centers, int L);

struct CoarseCapacity {
  double cap = 0;
  std::vector<Point> kept;
  std::vector<Point> dropped;
  double H = 0;
};

/// cap_N(Sigma(C~)) where C~ drops floor(rho |C|) boxes, one at a time, each
/// time the box carrying the largest equilibrium mass. Uses the plane Green
/// function; throws DomainError if a box leaves the optional window.
CoarseCapacity capacity_of_coarse_grained(const CoarseGrainResult& r, int N, double rho,
                                          const Window* window = nullptr);

/// H = (1/n) log(n)^2 + (1/n) log(M log n) log n.
double coarse_grain_H(double n, int M);

/// Smallest c for which cap >= (c H + (1+eta)/cap_segment)^{-1}.
double required_constant(double cap, double H, double cap_segment, double eta);

/// Path IO: one integer pair per line.
Path read_path(const std::string& file);
void write_path(const std::string& file, const Path& p);
std::string path_digest(const Path& p);

/// Validates that consecutive vertices are Lambda(L) neighbours.
void check_lambda_path(const Path& p, int L);

}  // namespace gff2d

namespace gff2d {

enum class PathKind { straight, spiral, drifted_walk, staircase };
const char* to_string(PathKind k);
PathKind path_kind_from_string(const std::string& s);

/// Random Lambda(L) path from x until it leaves B(x, N - 2L): a straight
/// staircase in a random direction, an outward spiral, a walk with a radial
/// drift, or a monotone staircase with random steps.
Path generate_test_path(PathKind kind, Point x, int N, int L, std::uint64_t seed);

}  // namespace gff2d
