#pragma once

#include <cmath>
#include <cstdint>
#include <string>

namespace canaudit {

// Counter-based splittable PRNG. Every draw is a pure function of
// (seed, stream, counter), so independent streams can be derived for
// workers, trials or resamples without sharing state, and replaying a
// stream from the same key reproduces it bit-for-bit on any platform.
class CounterRng {
public:
    explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0)
        : key_(mix(mix(seed) ^ (0x9E3779B97F4A7C15ULL * (stream + 1)))) {}

    std::uint64_t next_u64() { return mix(key_ + kGamma * ++counter_); }

    // Uniform in [0, 1), 53-bit resolution.
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // Uniform integer in [0, n). n must be > 0.
    std::uint64_t next_below(std::uint64_t n) {
        return static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
    }

    bool next_bernoulli(double p) { return next_double() < p; }

    // Box-Muller; avoids std::normal_distribution so that streams are
    // identical across standard libraries.
    double next_normal() {
        const double u1 = 1.0 - next_double();  // (0, 1]
        const double u2 = next_double();
        return std::sqrt(-2.0 * std::log(u1)) *
               std::cos(2.0 * 3.14159265358979323846 * u2);
    }

    // Stateless single draw for (seed, index)-keyed sampling.
    static double uniform_at(std::uint64_t seed, std::uint64_t index) {
        const std::uint64_t key = mix(mix(seed) ^ 0x9E3779B97F4A7C15ULL);
        return static_cast<double>(mix(key + kGamma * (index + 1)) >> 11) * 0x1.0p-53;
    }

    static std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

private:
    static constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;

    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

// Stable 64-bit FNV-1a over bytes; used for document identity and for
// keying deterministic noise off strings.
inline std::uint64_t fnv1a64(const std::string& s) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    return h;
}

}  // namespace canaudit
