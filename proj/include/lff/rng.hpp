#pragma once

#include <cmath>
#include <cstdint>

namespace lff {

// Deterministic splitmix64 stream. Cheap to seed, cheap to fork, and the
// whole pipeline derives every random draw from one root seed so runs are
// reproducible across platforms.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    // Independent substream: mixes the key into the seed through two
    // splitmix rounds so nearby keys give unrelated streams.
    Rng(std::uint64_t seed, std::uint64_t stream) {
        std::uint64_t s = seed;
        std::uint64_t h = step(s) ^ (stream * 0x9E3779B97F4A7C15ULL);
        state_ = h;
        step(state_);
    }

    std::uint64_t next_u64() { return step(state_); }

    // Uniform double in [0, 1) with 53 bits of mantissa.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Integer in [0, n). n must be positive; bias is negligible for n << 2^64.
    std::int64_t uniform_int(std::int64_t n) {
        return static_cast<std::int64_t>(next_u64() % static_cast<std::uint64_t>(n));
    }

    // Standard normal via Box-Muller. Always consumes exactly two uniforms
    // and never caches the sine branch, so the draw count per call is fixed.
    double gauss() {
        double u1 = 1.0 - uniform();  // (0, 1], keeps log finite
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        return r * std::cos(2.0 * 3.14159265358979323846 * u2);
    }

    Rng fork(std::uint64_t key) { return Rng(next_u64(), key); }

private:
    static std::uint64_t step(std::uint64_t& s) {
        std::uint64_t z = (s += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    std::uint64_t state_;
};

}  // namespace lff
