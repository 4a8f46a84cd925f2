#pragma once

#include <cstdint>

namespace sqt {

// Deterministic counter-based generator (splitmix64). The full stream is a
// pure function of the seed, so every sampler built on top of it is exactly
// reproducible and portable. Normal deviates use the Box-Muller cosine
// branch, two uniforms per draw, no cached state.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64();

  // Uniform in [0, 1), 53-bit resolution.
  double uniform01();

  // Uniform in [lo, hi).
  double uniform(double lo, double hi);

  // Standard normal deviate.
  double normal();

  double normal(double mean, double stddev);

  // Uniform integer in {0, ..., n-1}; n must be positive. Unbiased
  // (rejection sampling).
  int uniform_int(int n);

  std::uint64_t state() const { return state_; }

 private:
  std::uint64_t state_;
};

}  // namespace sqt
