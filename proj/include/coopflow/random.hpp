#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

#include "coopflow/types.hpp"

namespace coopflow {

using Rng = std::mt19937_64;

/// Derives an independent seed for a named substream (run, agent, purpose, ...).
/// SplitMix64 finalizer chained over the tags.
inline std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> tags) {
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  std::uint64_t h = mix(base);
  for (auto t : tags) h = mix(h ^ mix(t));
  return h;
}

inline Rng make_rng(std::uint64_t base, std::initializer_list<std::uint64_t> tags) {
  return Rng(derive_seed(base, tags));
}

// Stream purpose tags.
enum StreamTag : std::uint64_t {
  kTagTrajectory = 1,
  kTagMeasurement = 2,
  kTagPrior = 3,
  kTagFilter = 4,
  kTagAgent = 5,
};

inline double standard_normal(Rng& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  return n(rng);
}

inline Vec3 normal3(Rng& rng, double sigma) {
  std::normal_distribution<double> n(0.0, sigma);
  Vec3 v;
  for (int d = 0; d < 3; ++d) v[d] = n(rng);
  return v;
}

inline double uniform01(Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  return u(rng);
}

}  // namespace coopflow
