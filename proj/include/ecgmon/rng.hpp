#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>
#include <vector>

namespace ecgmon {

// Deterministic PRNG (splitmix64). The standard library's distributions and
// std::shuffle are implementation-defined, so every seeded code path in this
// project draws from this generator to keep results byte-identical across
// platforms and standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    // Uniform double in [0, 1) with 53 random bits.
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform double in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

    // Unbiased integer in [0, n) via rejection sampling. n must be > 0.
    std::uint64_t next_below(std::uint64_t n) {
        const std::uint64_t threshold = (0 - n) % n;  // 2^64 mod n
        for (;;) {
            const std::uint64_t r = next_u64();
            if (r >= threshold) return r % n;
        }
    }

    // Standard normal via Marsaglia's polar method with a cached spare.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * next_double() - 1.0;
            v = 2.0 * next_double() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double m = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * m;
        has_spare_ = true;
        return u * m;
    }

    // In-place Fisher-Yates shuffle.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(next_below(i));
            using std::swap;
            swap(v[i - 1], v[j]);
        }
    }

private:
    std::uint64_t state_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

// Stable per-stage seed derivation: mixes an FNV-1a hash of the label into the
// global seed so independent pipeline stages ("shuffle", "dropout", ...) get
// decorrelated but reproducible streams.
inline std::uint64_t derive_seed(std::uint64_t global_seed, std::string_view label) {
    std::uint64_t h = 0xCBF29CE484222325ULL;  // FNV-1a offset basis
    for (const char c : label) {
        h ^= static_cast<std::uint8_t>(c);
        h *= 0x100000001B3ULL;  // FNV prime
    }
    // One splitmix64 round over the combination decouples nearby seeds.
    std::uint64_t z = global_seed ^ h;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

}  // namespace ecgmon
