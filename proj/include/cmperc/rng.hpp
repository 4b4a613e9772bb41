#pragma once

#include <cstdint>
#include <cmath>
#include <limits>

namespace cmperc {

// splitmix64: used for seeding and key derivation only.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// xoshiro256++ (Blackman & Vigna). Satisfies UniformRandomBitGenerator so the
// <random> distributions can run on top of it.
class Rng {
public:
    using result_type = std::uint64_t;

    explicit Rng(std::uint64_t seed = 0) { reseed(seed); }

    void reseed(std::uint64_t seed) {
        std::uint64_t sm = seed;
        for (auto& w : s_) w = splitmix64(sm);
    }

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return ~std::uint64_t{0}; }

    result_type operator()() {
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

    // uniform in [0,1) with 53 random bits
    double u01() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

    // uniform integer in [0, n), unbiased (Lemire)
    std::uint64_t below(std::uint64_t n) {
        std::uint64_t x = (*this)();
        __uint128_t m = static_cast<__uint128_t>(x) * n;
        auto lo = static_cast<std::uint64_t>(m);
        if (lo < n) {
            const std::uint64_t t = -n % n;
            while (lo < t) {
                x = (*this)();
                m = static_cast<__uint128_t>(x) * n;
                lo = static_cast<std::uint64_t>(m);
            }
        }
        return static_cast<std::uint64_t>(m >> 64);
    }

    bool bernoulli(double p) { return u01() < p; }

    double exponential(double rate) { return -std::log1p(-u01()) / rate; }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }
    std::uint64_t s_[4];
};

// Stream phases keep the substreams of one replicate independent.
enum class Phase : std::uint64_t {
    degrees = 1,
    percolate = 2,
    matching = 3,
    explore = 4,
    limit = 5,
    marks = 6,
};

// Counter-based stream derivation: the stream for (master, replicate, phase)
// is independent of thread scheduling, so replicate r can be replayed alone.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t replicate,
                                 Phase phase) {
    std::uint64_t st = master;
    (void)splitmix64(st);
    st ^= 0x6a09e667f3bcc909ULL + splitmix64(st) + replicate;
    (void)splitmix64(st);
    st ^= 0xbb67ae8584caa73bULL + splitmix64(st) + static_cast<std::uint64_t>(phase);
    return splitmix64(st);
}

inline Rng make_stream(std::uint64_t master, std::uint64_t replicate, Phase phase) {
    return Rng(derive_seed(master, replicate, phase));
}

} // namespace cmperc
