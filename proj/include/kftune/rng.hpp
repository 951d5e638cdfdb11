#pragma once

#include <cmath>
#include <cstdint>

namespace kftune {

// Counter-based noise streams. Every draw is a pure function of
// (seed, evaluation, run, step, channel), so parallel execution order
// cannot change simulation results.

namespace detail {

inline uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Uniform in (0, 1): 53 mantissa bits, offset away from 0.
inline double to_unit_open(uint64_t h) {
    return static_cast<double>(h >> 11) * 0x1.0p-53 + 0x1.0p-54;
}

}  // namespace detail

/// One logical substream of white noise, keyed by (master seed, evaluation
/// counter, run index). Individual draws are further keyed by (step, channel).
class NoiseStream {
public:
    NoiseStream(uint64_t master_seed, uint64_t evaluation, uint64_t run) {
        uint64_t h = detail::splitmix64(master_seed ^ 0x243f6a8885a308d3ULL);
        h = detail::splitmix64(h ^ evaluation);
        base_ = detail::splitmix64(h ^ run);
    }

    double uniform(uint64_t step, uint32_t channel) const {
        return detail::to_unit_open(word(step, channel, 0));
    }

    /// Standard normal via Box-Muller on two independent uniforms.
    double normal(uint64_t step, uint32_t channel) const {
        const double u1 = detail::to_unit_open(word(step, channel, 0));
        const double u2 = detail::to_unit_open(word(step, channel, 1));
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
    }

private:
    uint64_t word(uint64_t step, uint32_t channel, uint32_t lane) const {
        uint64_t h = detail::splitmix64(base_ ^ step);
        h = detail::splitmix64(h ^ (static_cast<uint64_t>(channel) << 32 | lane));
        return h;
    }

    uint64_t base_;
};

/// Step key reserved for the initial-state draw of a rollout.
inline constexpr uint64_t kInitStep = ~0ULL;

}  // namespace kftune
