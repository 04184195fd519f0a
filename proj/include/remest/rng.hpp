#pragma once

#include <cstdint>

namespace remest {

/// splitmix64 finalizer. Bijective on 64-bit ints, used to derive stream seeds.
constexpr std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Domain-separated stream seed. Distinct (a, b) pairs give distinct seeds for a
/// fixed base seed because each stage is a bijection of the previous value.
constexpr std::uint64_t derive_stream(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
    return mix64(mix64(mix64(seed) ^ a) ^ b);
}

/// xoshiro256++ seeded through splitmix64. Deterministic across platforms.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) {
        std::uint64_t sm = seed;
        for (auto& w : s_) {
            sm += 0x9e3779b97f4a7c15ULL;
            std::uint64_t z = sm;
            z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
            z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
            w = z ^ (z >> 31);
        }
        if ((s_[0] | s_[1] | s_[2] | s_[3]) == 0) s_[0] = 1;
    }

    std::uint64_t raw() {
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

    /// Uniform on [0, 1), 53 random bits.
    double uniform01() { return static_cast<double>(raw() >> 11) * 0x1.0p-53; }

    /// Uniform on (0, 1); safe to pass to log().
    double uniform01_positive() {
        double v;
        do { v = uniform01(); } while (v <= 0.0);
        return v;
    }

    /// Standard normal via a 128-layer ziggurat; exact tail handling.
    double gaussian();

  private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
    double gaussian_tail(bool negative);

    std::uint64_t s_[4];
};

}  // namespace remest
