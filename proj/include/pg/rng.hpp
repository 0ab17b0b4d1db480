#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

namespace pg {

/// Counter-based PRNG: SplitMix64 applied to an incrementing counter.
/// The stream depends only on the seed (and optional sub-stream name),
/// so a given seed reproduces the same values on every run. Sub-streams
/// let independent consumers (init, data, rotation, ...) share one user
/// seed without perturbing each other.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : counter_(mix(seed ^ 0x5bd1e995u)) {}

    Rng(std::uint64_t seed, std::string_view stream)
        : counter_(mix(seed ^ fnv1a(stream))) {}

    std::uint64_t next_u64() {
        counter_ += 0x9e3779b97f4a7c15ull;
        return mix(counter_);
    }

    /// Uniform in [0, 1), 53-bit resolution.
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Standard normal via Box-Muller (one value per call).
    double normal() {
        double u1 = uniform();
        if (u1 <= 0.0) u1 = 0x1.0p-53;
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) *
               std::cos(2.0 * 3.14159265358979323846 * u2);
    }

    double normal(double mean, double std) { return mean + std * normal(); }

    /// Uniform integer in [0, n), n > 0.
    std::uint64_t below(std::uint64_t n) {
        return static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
    }

private:
    static std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    static std::uint64_t fnv1a(std::string_view s) {
        std::uint64_t h = 0xcbf29ce484222325ull;
        for (const char c : s) {
            h ^= static_cast<unsigned char>(c);
            h *= 0x100000001b3ull;
        }
        return h;
    }

    std::uint64_t counter_;
};

} // namespace pg
