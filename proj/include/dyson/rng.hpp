#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace dyson {

// Counter-based randomness: every draw is a pure function of
// (seed, step, index), so trajectories are reproducible regardless of
// execution order or threading.

inline uint64_t mix64(uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline uint64_t counter_hash(uint64_t seed, uint64_t step, uint64_t index) {
  return mix64(mix64(mix64(seed) ^ step) ^ index);
}

// Uniform in (0, 1): 53 mantissa bits, offset by half an ulp so 0 and 1 are
// unreachable (needed by the Box-Muller log).
inline double to_uniform(uint64_t bits) {
  return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

inline double uniform(uint64_t seed, uint64_t step, uint64_t index) {
  return to_uniform(counter_hash(seed, step, index));
}

// Standard normal via Box-Muller (cosine branch) on two salted uniforms.
inline double normal(uint64_t seed, uint64_t step, uint64_t index) {
  const uint64_t k = counter_hash(seed, step, index);
  const double u1 = to_uniform(k);
  const double u2 = to_uniform(mix64(k ^ 0xD1B54A32D192ED03ULL));
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace dyson
