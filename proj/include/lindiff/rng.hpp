#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace lindiff::rng {

// Philox4x32-10 counter-based generator (Salmon et al., SC'11). Counter-based
// because every value is addressed by (seed, stream, index): parallel fills and
// serial fills of the same array are bit-identical, and distinct streams never
// overlap. std::normal_distribution is not bit-portable, so normals are made
// here via Box-Muller on 53-bit uniforms.

inline std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> ctr,
                                                  std::uint32_t k0, std::uint32_t k1) {
    constexpr std::uint64_t m0 = 0xD2511F53ull;
    constexpr std::uint64_t m1 = 0xCD9E8D57ull;
    for (int round = 0; round < 10; ++round) {
        const std::uint64_t p0 = m0 * ctr[0];
        const std::uint64_t p1 = m1 * ctr[2];
        ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ k0,
               static_cast<std::uint32_t>(p1),
               static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ k1,
               static_cast<std::uint32_t>(p0)};
        k0 += 0x9E3779B9u;
        k1 += 0xBB67AE85u;
    }
    return ctr;
}

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

// One (seed, stream) pair addresses an unbounded sequence of doubles by index.
class Stream {
public:
    Stream(std::uint64_t seed, std::uint64_t stream) : seed_(seed), stream_(stream) {}

    // Child stream; salts chain, so derived(a).derived(b) != derived(b).derived(a).
    Stream derived(std::uint64_t salt) const {
        return Stream(seed_, splitmix64(stream_ ^ splitmix64(salt + 0x6A09E667F3BCC909ull)));
    }

    // Two uniforms in (0,1) from one Philox block.
    void uniform_pair(std::uint64_t index, double& u0, double& u1) const {
        const auto r = philox4x32_10(
            {static_cast<std::uint32_t>(stream_), static_cast<std::uint32_t>(stream_ >> 32),
             static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)},
            static_cast<std::uint32_t>(seed_), static_cast<std::uint32_t>(seed_ >> 32));
        const auto to_unit = [](std::uint32_t hi, std::uint32_t lo) {
            const std::uint64_t bits = (static_cast<std::uint64_t>(hi) << 32) | lo;
            return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
        };
        u0 = to_unit(r[0], r[1]);
        u1 = to_unit(r[2], r[3]);
    }

    double uniform(std::uint64_t index) const {
        double u0, u1;
        uniform_pair(index, u0, u1);
        return u0;
    }

    void normal_pair(std::uint64_t index, double& z0, double& z1) const {
        double u0, u1;
        uniform_pair(index, u0, u1);
        const double radius = std::sqrt(-2.0 * std::log(u0));
        const double angle = 6.283185307179586476925286766559 * u1;
        z0 = radius * std::cos(angle);
        z1 = radius * std::sin(angle);
    }

    // i-th normal of the stream; consecutive indices share Philox blocks pairwise.
    double normal(std::uint64_t index) const {
        double z0, z1;
        normal_pair(index >> 1, z0, z1);
        return (index & 1) ? z1 : z0;
    }

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream() const { return stream_; }

private:
    std::uint64_t seed_;
    std::uint64_t stream_;
};

inline Stream root_stream(std::uint64_t seed, std::uint64_t purpose) {
    return Stream(seed, splitmix64(purpose));
}

} // namespace lindiff::rng
