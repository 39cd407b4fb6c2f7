#pragma once

#include <cmath>
#include <cstdint>

namespace cogmap {

// Finalizer of the SplitMix64 generator (Steele, Lea, Flood 2014). Pure
// function of its input; also used to derive child stream seeds.
inline std::uint64_t splitmix64_scramble(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

// Stream splitting: a child seed is derived by folding fixed tags into the
// parent seed one scramble at a time. derive(seed, tag, a, b) is the
// documented scheme used everywhere reproducible sub-streams are needed
// (e.g. one stream per (frame, object) in scene synthesis). Golden files
// depend on this exact chain; do not reorder.
inline std::uint64_t derive_stream(std::uint64_t seed, std::uint64_t tag,
                                   std::uint64_t a = 0, std::uint64_t b = 0) {
    std::uint64_t h = splitmix64_scramble(seed ^ tag);
    h = splitmix64_scramble(h ^ a);
    h = splitmix64_scramble(h ^ b);
    return h;
}

// SplitMix64: portable, seedable, trivially reproducible across platforms.
// Used instead of <random> engines + distributions because libstdc++ and
// libc++ disagree on distribution outputs.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        state_ += 0x9E3779B97F4A7C15ULL;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    // Uniform in [0, 1) with 53 random bits.
    double uniform01() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // Uniform in [lo, hi).
    double uniform(double lo, double hi) {
        return lo + (hi - lo) * uniform01();
    }

    // Unbiased uniform integer in [0, n). Rejects the low residue range so
    // the remaining draw count is an exact multiple of n.
    std::uint64_t bounded(std::uint64_t n) {
        const std::uint64_t threshold = (0 - n) % n; // 2^64 mod n
        std::uint64_t x;
        do {
            x = next_u64();
        } while (x < threshold);
        return x % n;
    }

    // Standard normal via Box-Muller. Consumes two uniforms per pair and
    // caches the second deviate, so the draw sequence is fully determined
    // by the call count.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform01();
        double u2 = uniform01();
        if (u1 <= 0.0)
            u1 = 0x1.0p-53; // uniform01 can return exactly 0
        const double mag = std::sqrt(-2.0 * std::log(u1));
        const double ang = 2.0 * 3.14159265358979323846 * u2;
        spare_ = mag * std::sin(ang);
        have_spare_ = true;
        return mag * std::cos(ang);
    }

private:
    std::uint64_t state_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

} // namespace cogmap
