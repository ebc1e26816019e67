#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace demboost {

// Draw helpers built directly on the mt19937_64 output stream. The standard
// fixes the engine sequence but not the <random> distributions, so every
// mapping that must be reproducible across compilers lives here.

inline double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform_range(std::mt19937_64& rng, double lo, double hi) {
    return lo + (hi - lo) * uniform01(rng);
}

// Box-Muller without state; consumes exactly two engine draws per call.
inline double normal01(std::mt19937_64& rng) {
    double u1 = uniform01(rng);
    double u2 = uniform01(rng);
    if (u1 < 1e-300) u1 = 1e-300;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
}

// Uniform integer in [0, n). Modulo bias is ~n/2^64, irrelevant here; what
// matters is that the mapping is identical on every platform.
inline std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t n) {
    return n == 0 ? 0 : rng() % n;
}

}  // namespace demboost
