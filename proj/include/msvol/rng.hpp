#pragma once

#include <cstdint>
#include <random>

namespace msvol {

// Stream seeding: scramble (seed, stream-index) so logical work units get
// decorrelated generators no matter how threads pick them up.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

inline std::mt19937_64 stream_rng(std::uint64_t seed, std::uint64_t stream) {
    return std::mt19937_64(splitmix64(seed ^ splitmix64(stream + 1)));
}

// Uniform in (0,1), strictly interior.
inline double uniform01(std::mt19937_64& rng) {
    return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

// Inverse normal CDF (Acklam's rational approximation, ~1e-9 relative).
// Branch-stable and identical on every run, which matters more here than the
// last few digits.
double norm_inv(double p);

inline double normal_draw(std::mt19937_64& rng) { return norm_inv(uniform01(rng)); }

} // namespace msvol
