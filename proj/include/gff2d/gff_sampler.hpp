#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "gff2d/lattice.hpp"
#include "gff2d/rng.hpp"

namespace gff2d {

enum class SamplerMethod { factorization, spectral };
std::string to_string(SamplerMethod m);
SamplerMethod sampler_method_from_string(const std::string& s);

struct Field {
  Window window;
  WalkModel model;
  std::vector<double> values;  // row-major over the window
  std::uint64_t seed = 0;
  SamplerMethod method = SamplerMethod::spectral;
  double at(Point p) const { return values[window.index(p)]; }
};

/// Exact sampler through a sparse Cholesky factor of Q (optionally with the
/// field pinned to zero on a set U).
class FactorizationSampler {
 public:
  FactorizationSampler(const WalkModel& m, const Window& w, const PointSet& U = {});
  ~FactorizationSampler();
  FactorizationSampler(FactorizationSampler&&) noexcept;
  void sample(Engine& rng, std::span<double> out) const;
  const Window& window() const;

  /// Largest window handled before the factor becomes a memory hazard.
  static constexpr std::size_t kMaxSites = 600000;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Exact torus sampler: one complex FFT yields two independent fields.
class SpectralSampler {
 public:
  SpectralSampler(const WalkModel& m, const Window& torus);
  ~SpectralSampler();
  SpectralSampler(SpectralSampler&&) noexcept;
  /// Two independent fields from the stream identified by key.
  void sample_pair(std::uint64_t key, std::span<double> a, std::span<double> b) const;
  const Window& window() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Deterministic in (model, window, seed, method).
Field sample_field(const WalkModel& m, const Window& w, std::uint64_t seed, SamplerMethod method);

struct Decomposition {
  std::vector<double> eta;
  std::vector<double> psi;
  PointSet anchor_set;
};

/// eta = harmonic extension of the field off K (zero at an absorbing
/// exterior), psi = field - eta.
Decomposition decompose(const Field& f, const PointSet& K);

/// Flat little-endian float64 array plus a JSON sidecar "<path>.json".
void write_field(const Field& f, const std::filesystem::path& path);
Field read_field(const std::filesystem::path& path);

}  // namespace gff2d
