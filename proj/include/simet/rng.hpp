#pragma once

// Seedable, portable randomness for reproducible walks. The bit-stream is
// pinned: xoshiro256++ state seeded by four successive splitmix64 outputs,
// uniform doubles taken from the top 53 bits, and normals produced by the
// Marsaglia polar method (pairs drawn as u1 then u2, rejected together while
// s = u1^2 + u2^2 >= 1 or s == 0; the second member of each pair is cached).

#include <cstdint>
#include <cmath>

#include "simet/linalg.hpp"

namespace simet {

inline std::uint64_t splitmix64_next(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

class Xoshiro256PlusPlus {
public:
    explicit Xoshiro256PlusPlus(std::uint64_t seed) {
        std::uint64_t sm = seed;
        for (auto& word : s_) word = splitmix64_next(sm);
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    // uniform in [0, 1), 53-bit resolution
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // uniform in [-1, 1)
    double next_symmetric() { return 2.0 * next_double() - 1.0; }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
    std::uint64_t s_[4];
};

class NormalSampler {
public:
    explicit NormalSampler(Xoshiro256PlusPlus& rng) : rng_(rng) {}

    double next() {
        if (have_cached_) {
            have_cached_ = false;
            return cached_;
        }
        double u1, u2, s;
        do {
            u1 = rng_.next_symmetric();
            u2 = rng_.next_symmetric();
            s = u1 * u1 + u2 * u2;
        } while (s >= 1.0 || s == 0.0);
        const double f = std::sqrt(-2.0 * std::log(s) / s);
        cached_ = u2 * f;
        have_cached_ = true;
        return u1 * f;
    }

    Vector next_vector(std::size_t n) {
        Vector v(n);
        for (std::size_t i = 0; i < n; ++i) v[i] = next();
        return v;
    }

private:
    Xoshiro256PlusPlus& rng_;
    double cached_ = 0.0;
    bool have_cached_ = false;
};

} // namespace simet
