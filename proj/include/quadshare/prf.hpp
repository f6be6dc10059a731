#pragma once

// Counter-mode keyed generator used as the pairwise PRF.  Two holders of the
// same key advance their counters in lockstep and read identical streams, so
// correlated randomness never costs a message.

#include <cstdint>
#include <vector>

#include "quadshare/ring.hpp"

namespace quadshare {

inline std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

class PairStream {
public:
    PairStream() = default;
    explicit PairStream(std::uint64_t key) : key_(key) {}

    std::uint64_t next_u64() {
        return mix64(key_ + 0x9E3779B97F4A7C15ULL * ++counter_);
    }

    u128 next_ring(const RingConfig& cfg) {
        u128 v = next_u64();
        if (cfg.n > 64) v |= u128(next_u64()) << 64;
        return v & cfg.mask();
    }

    int next_bit() { return int(next_u64() & 1); }

    // One whole block per bit keeps both ends of a pair trivially in sync.
    void next_bits(std::size_t count, std::uint8_t* out) {
        for (std::size_t i = 0; i < count; ++i) out[i] = std::uint8_t(next_u64() & 1);
    }

    std::uint64_t invocations() const { return counter_; }

private:
    std::uint64_t key_ = 0;
    std::uint64_t counter_ = 0;
};

} // namespace quadshare
