#pragma once

#include <cstdint>
#include <random>

namespace etform {

/// Uniform double in [0, 1) from the top 53 bits of a 64-bit engine. Unlike
/// std::uniform_real_distribution this is identical across standard libraries.
inline double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * uniform01(rng);
}

}  // namespace etform
