#pragma once

#include <cmath>
#include <cstdint>

namespace gasnet {

/// Philox4x32-10 counter-based generator. A draw is a pure function of
/// (key, counter), so parallel Monte-Carlo runs can pull independent,
/// reproducible streams without shared state.
struct Philox {
    static constexpr uint32_t M0 = 0xD2511F53u, M1 = 0xCD9E8D57u;
    static constexpr uint32_t W0 = 0x9E3779B9u, W1 = 0xBB67AE85u;

    static void round(uint32_t ctr[4], const uint32_t key[2]) {
        const uint64_t p0 = static_cast<uint64_t>(M0) * ctr[0];
        const uint64_t p1 = static_cast<uint64_t>(M1) * ctr[2];
        uint32_t hi0 = static_cast<uint32_t>(p0 >> 32), lo0 = static_cast<uint32_t>(p0);
        uint32_t hi1 = static_cast<uint32_t>(p1 >> 32), lo1 = static_cast<uint32_t>(p1);
        uint32_t out[4] = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
        ctr[0] = out[0]; ctr[1] = out[1]; ctr[2] = out[2]; ctr[3] = out[3];
    }

    static void block(uint64_t key, uint64_t c01, uint64_t c23, uint32_t out[4]) {
        uint32_t k[2] = {static_cast<uint32_t>(key), static_cast<uint32_t>(key >> 32)};
        uint32_t ctr[4] = {static_cast<uint32_t>(c01), static_cast<uint32_t>(c01 >> 32),
                           static_cast<uint32_t>(c23), static_cast<uint32_t>(c23 >> 32)};
        for (int r = 0; r < 10; ++r) {
            if (r > 0) { k[0] += W0; k[1] += W1; }
            round(ctr, k);
        }
        out[0] = ctr[0]; out[1] = ctr[1]; out[2] = ctr[2]; out[3] = ctr[3];
    }

    /// uniform in (0,1), 53-bit mantissa
    static double uniform01(uint64_t key, uint64_t c01, uint64_t c23) {
        uint32_t o[4];
        block(key, c01, c23, o);
        uint64_t bits = (static_cast<uint64_t>(o[0]) << 32) | o[1];
        return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
    }

    /// standard normal keyed by (seed, run, slot); Box-Muller on one block
    static double normal(uint64_t seed, uint64_t run, uint64_t slot) {
        uint32_t o[4];
        block(seed, run, slot, o);
        uint64_t b1 = (static_cast<uint64_t>(o[0]) << 32) | o[1];
        uint64_t b2 = (static_cast<uint64_t>(o[2]) << 32) | o[3];
        double u1 = (static_cast<double>(b1 >> 11) + 0.5) * 0x1.0p-53;
        double u2 = (static_cast<double>(b2 >> 11) + 0.5) * 0x1.0p-53;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
    }

    static double uniform(uint64_t seed, uint64_t run, uint64_t slot) {
        return uniform01(seed, run, slot);
    }
};

}  // namespace gasnet
