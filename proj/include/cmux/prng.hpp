#ifndef CMUX_PRNG_HPP
#define CMUX_PRNG_HPP

#include <cmath>
#include <cstdint>

namespace cmux {

// Counter-based generator: every draw is a pure function of (seed, stream,
// counter), so generated codes, filters and ensembles do not depend on the
// order of evaluation or on how work is split across threads.
namespace rng {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t mix(std::uint64_t seed, std::uint64_t stream,
                         std::uint64_t counter) {
    return splitmix64(splitmix64(splitmix64(seed) ^ stream) ^ counter);
}

// Uniform in [0, 1), 53 usable bits.
inline double uniform(std::uint64_t seed, std::uint64_t stream,
                      std::uint64_t counter) {
    return static_cast<double>(mix(seed, stream, counter) >> 11) * 0x1.0p-53;
}

// Fair +/-1.
inline double rademacher(std::uint64_t seed, std::uint64_t stream,
                         std::uint64_t counter) {
    return (mix(seed, stream, counter) & 1u) ? 1.0 : -1.0;
}

// Standard normal via Box-Muller; consumes counters (2k, 2k+1).
inline double gaussian(std::uint64_t seed, std::uint64_t stream,
                       std::uint64_t counter) {
    const double u1 =
        (static_cast<double>(mix(seed, stream, 2 * counter) >> 11) + 1.0) *
        0x1.0p-53;  // (0, 1], keeps log finite
    const double u2 = uniform(seed, stream, 2 * counter + 1);
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(6.283185307179586476925286766559 * u2);
}

// Derive a child seed, e.g. per-trial seeds from (base_seed, cell, trial).
inline std::uint64_t derive(std::uint64_t seed, std::uint64_t a,
                            std::uint64_t b = 0) {
    return mix(seed, a, b);
}

}  // namespace rng
}  // namespace cmux

#endif
