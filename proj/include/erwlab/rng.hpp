#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace erwlab {

/// splitmix64 finalizer
constexpr std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Per-trajectory stream key derived from (master_seed, index).
constexpr std::uint64_t trajectory_key(std::uint64_t master_seed, std::uint64_t index) {
    return mix64(mix64(master_seed) ^ mix64(index + 0x632be59bd9b4e019ULL));
}

/// Philox4x32-10 counter-based generator.
class Philox {
public:
    using Block = std::array<std::uint32_t, 4>;

    static Block generate(std::uint64_t key, std::uint64_t counter, std::uint32_t lane = 0) {
        return rounds({static_cast<std::uint32_t>(counter), static_cast<std::uint32_t>(counter >> 32), lane, 0u},
                      static_cast<std::uint32_t>(key), static_cast<std::uint32_t>(key >> 32));
    }

    static Block rounds(Block ctr, std::uint32_t k0, std::uint32_t k1) {
        for (int round = 0; round < 10; ++round) {
            const std::uint64_t p0 = static_cast<std::uint64_t>(kM0) * ctr[0];
            const std::uint64_t p1 = static_cast<std::uint64_t>(kM1) * ctr[2];
            ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ k0, static_cast<std::uint32_t>(p1),
                   static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ k1, static_cast<std::uint32_t>(p0)};
            k0 += kW0;
            k1 += kW1;
        }
        return ctr;
    }

    /// Two uniforms in [0,1) with 53 random bits each.
    static std::array<double, 2> uniforms(std::uint64_t key, std::uint64_t counter, std::uint32_t lane = 0) {
        const Block b = generate(key, counter, lane);
        const std::uint64_t a = (static_cast<std::uint64_t>(b[0]) << 32) | b[1];
        const std::uint64_t c = (static_cast<std::uint64_t>(b[2]) << 32) | b[3];
        return {static_cast<double>(a >> 11) * 0x1.0p-53, static_cast<double>(c >> 11) * 0x1.0p-53};
    }

    /// One standard normal via Box-Muller on a dedicated lane.
    static double normal(std::uint64_t key, std::uint64_t counter, std::uint32_t lane = 1) {
        const auto u = uniforms(key, counter, lane);
        const double r = std::sqrt(-2.0 * std::log1p(-u[0]));  // 1-u in (0,1]
        return r * std::cos(6.283185307179586 * u[1]);
    }

private:
    static constexpr std::uint32_t kM0 = 0xD2511F53u, kM1 = 0xCD9E8D57u;
    static constexpr std::uint32_t kW0 = 0x9E3779B9u, kW1 = 0xBB67AE85u;
};

}  // namespace erwlab
