#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

namespace edema::rng {

// Deterministic random source used everywhere randomness is needed.
//
// The generator and every derived distribution are pinned so that a given
// 64-bit seed produces the same byte stream on any platform and in any
// release:
//   * state: xoshiro256** (Blackman/Vigna), seeded by four consecutive
//     outputs of splitmix64 applied to the user seed;
//   * uniform01: top 53 bits of next_u64, scaled by 2^-53 -> [0, 1);
//   * uniform_below(n): rejection sampling on next_u64, then modulo;
//   * normal: Box-Muller on two uniforms, cosine branch only;
//   * geometric_count(p): 1 + floor(log(1-u) / log(1-p)), support {1,2,...};
//   * shuffle: Fisher-Yates from the top index down.
// std::random distributions are deliberately not used: their output is
// implementation-defined and would break byte-identical fixtures.

struct SplitMix64 {
    std::uint64_t state;

    explicit SplitMix64(std::uint64_t seed) : state(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }
};

class Xoshiro256StarStar {
  public:
    explicit Xoshiro256StarStar(std::uint64_t seed) {
        SplitMix64 sm(seed);
        for (auto& word : s_) word = sm.next();
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    /// Uniform double in [0, 1).
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [0, n); n must be positive.
    std::uint64_t uniform_below(std::uint64_t n) {
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t x;
        do {
            x = next_u64();
        } while (x >= limit);
        return x % n;
    }

    bool bernoulli(double p) { return uniform01() < p; }

    /// Standard normal deviate (Box-Muller, cosine branch).
    double normal() {
        double u1 = 1.0 - uniform01();  // (0, 1]
        double u2 = uniform01();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
    }

    double lognormal(double mu, double sigma) { return std::exp(mu + sigma * normal()); }

    /// Geometric count with support {1, 2, ...}; mean 1/p.
    std::uint64_t geometric_count(double p) {
        if (p >= 1.0) return 1;
        double u = uniform01();
        double k = std::floor(std::log1p(-u) / std::log1p(-p));
        return 1 + static_cast<std::uint64_t>(k);
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(uniform_below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

  private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    std::uint64_t s_[4];
};

using Rng = Xoshiro256StarStar;

}  // namespace edema::rng
