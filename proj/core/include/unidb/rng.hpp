// Counter-based random number generation (Philox4x32-10).
//
// Streams are addressed by (seed, stream name): two Prng instances built
// from the same pair produce identical draws in any process, which is what
// makes sweeps reproducible and parallelizable on disjoint streams.
#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <string_view>

namespace unidb {

namespace detail {

inline constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += kGolden);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t fnv1a(std::string_view text) {
    std::uint64_t hash = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        hash ^= c;
        hash *= 0x100000001b3ULL;
    }
    return hash;
}

}  // namespace detail

// Philox4x32 with 10 rounds. The 64-bit key comes from the seed, the high
// half of the 128-bit counter from the stream name, the low half counts
// blocks. Distinct names therefore give independent streams under one seed.
class Prng {
public:
    Prng(std::uint64_t seed, std::string_view stream) {
        std::uint64_t state = seed;
        key_[0] = static_cast<std::uint32_t>(detail::splitmix64(state));
        key_[1] = static_cast<std::uint32_t>(detail::splitmix64(state) >> 32);
        stream_salt_ = detail::fnv1a(stream) ^ detail::splitmix64(state);
    }

    // Uniform double in (0, 1); never returns exactly 0 or 1.
    double uniform() {
        const std::uint64_t bits = next_u64();
        return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
    }

    // Standard normal via Box-Muller on a fixed pair of uniforms.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = uniform();
        const double u2 = uniform();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 6.283185307179586476925286766559 * u2;
        spare_ = radius * std::sin(angle);
        have_spare_ = true;
        return radius * std::cos(angle);
    }

    void fill_normal(double* out, std::size_t n) {
        for (std::size_t i = 0; i < n; ++i) out[i] = normal();
    }

private:
    std::uint64_t next_u64() {
        if (lane_ == 4) {
            block();
            lane_ = 0;
        }
        const std::uint64_t lo = out_[lane_];
        const std::uint64_t hi = out_[lane_ + 1];
        lane_ += 2;
        return (hi << 32) | lo;
    }

    void block() {
        std::uint32_t c0 = static_cast<std::uint32_t>(block_index_);
        std::uint32_t c1 = static_cast<std::uint32_t>(block_index_ >> 32);
        std::uint32_t c2 = static_cast<std::uint32_t>(stream_salt_);
        std::uint32_t c3 = static_cast<std::uint32_t>(stream_salt_ >> 32);
        std::uint32_t k0 = key_[0];
        std::uint32_t k1 = key_[1];
        for (int round = 0; round < 10; ++round) {
            const std::uint64_t p0 = 0xD2511F53ULL * c0;
            const std::uint64_t p1 = 0xCD9E8D57ULL * c2;
            const std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
            const std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
            const std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
            const std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
            const std::uint32_t n0 = hi1 ^ c1 ^ k0;
            const std::uint32_t n1 = lo1;
            const std::uint32_t n2 = hi0 ^ c3 ^ k1;
            const std::uint32_t n3 = lo0;
            c0 = n0;
            c1 = n1;
            c2 = n2;
            c3 = n3;
            k0 += 0x9E3779B9u;
            k1 += 0xBB67AE85u;
        }
        out_[0] = c0;
        out_[1] = c1;
        out_[2] = c2;
        out_[3] = c3;
        ++block_index_;
    }

    std::array<std::uint32_t, 2> key_{};
    std::uint64_t stream_salt_ = 0;
    std::uint64_t block_index_ = 0;
    std::array<std::uint32_t, 4> out_{};
    int lane_ = 4;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace unidb
