#pragma once

// Philox4x32-10 counter-based generator. Draws are a pure function of
// (key, counter), so trajectories sampled in parallel reproduce bitwise under
// any schedule. The generator family name is part of the experiment config.

#include <array>
#include <cstdint>

namespace a2walk {

inline constexpr const char* kRngFamily = "philox4x32-10";

namespace detail {

inline void philox_round(std::array<std::uint32_t, 4>& ctr, std::array<std::uint32_t, 2>& key) {
    constexpr std::uint64_t M0 = 0xD2511F53ull;
    constexpr std::uint64_t M1 = 0xCD9E8D57ull;
    const std::uint64_t p0 = M0 * ctr[0];
    const std::uint64_t p1 = M1 * ctr[2];
    const std::array<std::uint32_t, 4> next{
        static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0],
        static_cast<std::uint32_t>(p1),
        static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1],
        static_cast<std::uint32_t>(p0),
    };
    ctr = next;
    key[0] += 0x9E3779B9u;
    key[1] += 0xBB67AE85u;
}

}  // namespace detail

inline std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                               std::array<std::uint32_t, 2> key) {
    for (int round = 0; round < 10; ++round) detail::philox_round(counter, key);
    return counter;
}

// One 64-bit draw keyed by (seed, stream, step).
inline std::uint64_t philox_u64(std::uint64_t seed, std::uint64_t stream, std::uint64_t step) {
    const std::array<std::uint32_t, 4> ctr{
        static_cast<std::uint32_t>(step), static_cast<std::uint32_t>(step >> 32),
        static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
    const std::array<std::uint32_t, 2> key{static_cast<std::uint32_t>(seed),
                                           static_cast<std::uint32_t>(seed >> 32)};
    const auto out = philox4x32(ctr, key);
    return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

// Stateless uniform stream with a step counter, for test data generation.
class PhiloxStream {
public:
    PhiloxStream(std::uint64_t seed, std::uint64_t stream) : seed_(seed), stream_(stream) {}

    std::uint64_t next_u64() { return philox_u64(seed_, stream_, n_++); }

    // Uniform in [0, bound) by rejection; bound > 0.
    std::uint64_t next_below(std::uint64_t bound) {
        const std::uint64_t limit = bound * (~std::uint64_t{0} / bound);
        for (;;) {
            std::uint64_t x = next_u64();
            if (x < limit) return x % bound;
        }
    }

private:
    std::uint64_t seed_;
    std::uint64_t stream_;
    std::uint64_t n_ = 0;
};

}  // namespace a2walk
