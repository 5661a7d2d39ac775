#pragma once

#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace gff2d {

/// Minimizer of the kernel energy on the uniform n-cell grid of [0,1].
struct SegmentDiscretization {
  int n = 0;
  std::vector<double> nodes;    // cell midpoints
  std::vector<double> weights;  // probability vector
  double energy = 0;
  double cap = 0;
  double tau = 0;
  int iterations = 0;
  double residual = 0;  // Frank-Wolfe duality gap at the returned iterate
};

/// (2/pi) K0(2|x-y|), averaged over every pair of grid cells. The matrix is
/// symmetric Toeplitz; products are evaluated by circulant embedding.
class SegmentKernel {
 public:
  explicit SegmentKernel(int n);
  ~SegmentKernel();
  SegmentKernel(SegmentKernel&&) noexcept;
  SegmentKernel& operator=(SegmentKernel&&) noexcept;

  int n() const { return n_; }
  /// Averaged kernel for cells i and j (depends on |i-j| only).
  double operator()(int i, int j) const { return diag_[i > j ? i - j : j - i]; }
  const std::vector<double>& diagonals() const { return diag_; }
  /// out = A w
  void apply(std::span<const double> w, std::span<double> out) const;
  double energy(std::span<const double> w) const;

 private:
  int n_;
  std::vector<double> diag_;
  struct Fft;
  std::unique_ptr<Fft> fft_;
};

/// Exact average of (2/pi) K0(2|x-y|) over x in cell i, y in cell i+d of
/// the n-cell grid of [0,1].
double segment_kernel_cell_average(int n, int d);

/// Energy sum_ij A_ij w_i w_j. Throws ValidationError unless w is a
/// probability vector of length n.
double segment_energy(std::span<const double> weights, int n);
double segment_energy(const SegmentKernel& kernel, std::span<const double> weights);

struct MinimizeOptions {
  int max_iterations = 200000;
  bool verbose = false;
};

/// Accelerated projected gradient on the simplex; stops once the duality
/// gap drops below tol. Throws ConvergenceError with the best iterate when
/// the budget runs out.
SegmentDiscretization minimize_segment(int n, double tol, const MinimizeOptions& opt = {});
SegmentDiscretization minimize_segment(const SegmentKernel& kernel, double tol,
                                       const MinimizeOptions& opt = {});

/// Euclidean projection onto the probability simplex.
void project_simplex(std::span<double> v);

struct CapacityStudy {
  std::vector<SegmentDiscretization> levels;
  double cap_finest = 0;
  double tau_finest = 0;
  double cap_extrapolated = 0;
  double extrapolation_error = 0;
  double observed_order = 0;
  bool cauchy_ok = false;  // |cap(n_{k-1}) - cap(n_k)| < 1e-3 at the two finest
};

CapacityStudy segment_capacity_study(const std::vector<int>& ns = {500, 1000, 2000, 4000},
                                     double tol = 1e-13);

/// Location of the persistent results store holding the certified
/// capacity study. Defaults to $GFF2D_RESULTS_DIR or the build-time path.
std::filesystem::path results_store_path();
void set_results_store_path(const std::filesystem::path& p);

/// Writes the study to the results store as JSON.
void save_capacity_study(const CapacityStudy& s, const std::filesystem::path& p);
/// Reads a stored study; returns false if absent or malformed.
bool load_capacity_study(const std::filesystem::path& p, CapacityStudy& out);

/// cap of [0,1] from the finest converged grid, computing and storing the
/// study on first use.
double cap_reference();
double tau_reference();

}  // namespace gff2d
