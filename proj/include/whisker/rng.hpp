#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace whisker::rng {

// SplitMix64 finalizer. Counter-based draws keep every sample independent of
// evaluation order, so parallel loops reproduce the serial bit pattern.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

constexpr std::uint64_t hash3(std::uint64_t seed, std::uint64_t stream,
                              std::uint64_t index) noexcept {
    std::uint64_t h = mix64(seed);
    h = mix64(h ^ mix64(stream + 0x9e3779b97f4a7c15ULL));
    h = mix64(h ^ index);
    return h;
}

// Uniform draw in (0, 1]; never returns 0 so log() is safe.
inline double uniform(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) noexcept {
    const std::uint64_t bits = hash3(seed, stream, index) >> 11;  // 53 bits
    return (static_cast<double>(bits) + 1.0) * 0x1p-53;
}

// Standard normal via Box-Muller on two decorrelated counter draws.
inline double gaussian(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) noexcept {
    const std::uint64_t h = hash3(seed, stream, index);
    const double u1 = (static_cast<double>(mix64(h ^ 0x5851f42d4c957f2dULL) >> 11) + 1.0) * 0x1p-53;
    const double u2 = (static_cast<double>(mix64(h ^ 0x14057b7ef767814fULL) >> 11) + 1.0) * 0x1p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace whisker::rng
