#pragma once

#include <array>
#include <cstdint>

namespace qkd {

/// Philox4x32-10 counter-based generator. Every 128-bit output block is a
/// pure function of (key, counter), so any draw in a simulation can be
/// addressed as (seed, gate_index, tag, index) and regenerated in any order
/// or from any thread with identical bits.
struct Philox4x32 {
    static constexpr std::uint32_t kM0 = 0xD2511F53u;
    static constexpr std::uint32_t kM1 = 0xCD9E8D57u;
    static constexpr std::uint32_t kW0 = 0x9E3779B9u;
    static constexpr std::uint32_t kW1 = 0xBB67AE85u;

    static std::array<std::uint32_t, 4> block(std::uint64_t key,
                                              std::uint64_t counter_lo,
                                              std::uint32_t tag,
                                              std::uint32_t index) {
        std::uint32_t c0 = static_cast<std::uint32_t>(counter_lo);
        std::uint32_t c1 = static_cast<std::uint32_t>(counter_lo >> 32);
        std::uint32_t c2 = tag;
        std::uint32_t c3 = index;
        std::uint32_t k0 = static_cast<std::uint32_t>(key);
        std::uint32_t k1 = static_cast<std::uint32_t>(key >> 32);
        for (int round = 0; round < 10; ++round) {
            std::uint64_t p0 = static_cast<std::uint64_t>(kM0) * c0;
            std::uint64_t p1 = static_cast<std::uint64_t>(kM1) * c2;
            std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
            std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
            std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
            std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
            std::uint32_t n0 = hi1 ^ c1 ^ k0;
            std::uint32_t n2 = hi0 ^ c3 ^ k1;
            c0 = n0;
            c1 = lo1;
            c2 = n2;
            c3 = lo0;
            k0 += kW0;
            k1 += kW1;
        }
        return {c0, c1, c2, c3};
    }
};

/// One addressed 128-bit draw, exposed as two u64 lanes / unit doubles.
struct RandomBlock {
    std::array<std::uint32_t, 4> w;

    std::uint64_t u64(int lane) const {
        return (static_cast<std::uint64_t>(w[2 * lane + 1]) << 32) | w[2 * lane];
    }
    /// Uniform double in [0, 1) with 53 random bits.
    double unit(int lane) const {
        return static_cast<double>(u64(lane) >> 11) * 0x1.0p-53;
    }
    /// Uniform double in (0, 1], safe as a log/quantile argument.
    double unit_open(int lane) const {
        return (static_cast<double>(u64(lane) >> 11) + 1.0) * 0x1.0p-53;
    }
};

inline RandomBlock random_block(std::uint64_t seed, std::uint64_t counter,
                                std::uint32_t tag, std::uint32_t index = 0) {
    return {Philox4x32::block(seed, counter, tag, index)};
}

/// Inverse standard normal CDF (Acklam's rational approximation with one
/// Halley refinement; absolute error far below any jitter tolerance here).
double inverse_normal_cdf(double p);

}  // namespace qkd
