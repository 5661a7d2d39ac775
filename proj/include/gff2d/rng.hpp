#pragma once

#include <cstdint>
#include <random>

namespace gff2d {

/// splitmix64 finaliser.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Deterministic key derived from a master seed and up to two stream ids.
inline std::uint64_t stream_key(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
  return mix64(mix64(mix64(seed) ^ a) + 0x632be59bd9b4e019ULL * (b + 1));
}

/// Uniform in (0,1) obtained by hashing (key, counter). Identical keys and
/// counters give identical values regardless of call order.
inline double hash_uniform(std::uint64_t key, std::uint64_t counter) {
  const std::uint64_t h = mix64(key ^ mix64(counter));
  return (static_cast<double>(h >> 11) + 0.5) * 0x1.0p-53;
}

/// Stream tags separating the random consumers of one seed.
enum class Stream : std::uint64_t {
  field = 1,
  edges = 2,
  trajectories = 3,
  poisson = 4,
  paths = 5,
  marginal = 6,
};

inline std::uint64_t stream_key(std::uint64_t seed, Stream s, std::uint64_t b = 0) {
  return stream_key(seed, static_cast<std::uint64_t>(s), b);
}

using Engine = std::mt19937_64;

inline Engine make_engine(std::uint64_t key) { return Engine(mix64(key)); }

/// Uniform in (0,1) from a 64-bit engine.
inline double uniform01(Engine& e) { return (static_cast<double>(e() >> 11) + 0.5) * 0x1.0p-53; }

}  // namespace gff2d
