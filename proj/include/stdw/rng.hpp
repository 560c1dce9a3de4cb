#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace stdw {

// Deterministic RNG built on std::mt19937_64 (bit-exact per the standard).
// The float/gaussian/shuffle conversions are hand-rolled because the
// standard library distributions are implementation-defined: two builds of
// the same seed must produce identical experiment runs.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    std::uint64_t next_u64() { return eng_(); }

    // Uniform in [0, 1) with 53 random bits.
    double uniform01() {
        return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    // Box-Muller without the cached spare: one draw consumes two uniforms,
    // keeping the stream position independent of call history.
    double gaussian() {
        double u1 = 0.0;
        do {
            u1 = uniform01();
        } while (u1 == 0.0);
        const double u2 = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        return r * std::cos(2.0 * M_PI * u2);
    }

    // Unbiased integer in [0, n) via masked rejection.
    std::uint64_t below(std::uint64_t n) {
        if (n <= 1) return 0;
        std::uint64_t mask = n - 1;
        mask |= mask >> 1;
        mask |= mask >> 2;
        mask |= mask >> 4;
        mask |= mask >> 8;
        mask |= mask >> 16;
        mask |= mask >> 32;
        std::uint64_t x = 0;
        do {
            x = eng_() & mask;
        } while (x >= n);
        return x;
    }

    // Fisher-Yates.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::mt19937_64 eng_;
};

// SplitMix64 step, used to derive independent stream seeds from a base seed
// plus salt words. mix(seed, a) != mix(seed, b) for a != b with overwhelming
// probability, and nearby seeds decorrelate.
inline std::uint64_t mix_seed(std::uint64_t seed) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
    return mix_seed(mix_seed(seed) ^ salt);
}

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
    return mix_seed(mix_seed(seed, a) ^ b);
}

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b,
                              std::uint64_t c) {
    return mix_seed(mix_seed(seed, a, b) ^ c);
}

}  // namespace stdw
