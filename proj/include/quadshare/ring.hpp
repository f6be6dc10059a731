#pragma once

// Exact arithmetic in Z_{2^n} with two's-complement signed interpretation,
// plus the fixed-point mapping between reals and ring elements.

#include <cmath>
#include <cstdint>
#include <string>

#include "quadshare/errors.hpp"

namespace quadshare {

using u128 = unsigned __int128;
using i128 = __int128;

constexpr u128 make_u128(std::uint64_t hi, std::uint64_t lo) {
    return (u128(hi) << 64) | u128(lo);
}

inline std::string to_string(u128 v) {
    if (v == 0) return "0";
    std::string s;
    while (v > 0) {
        s.insert(s.begin(), char('0' + int(v % 10)));
        v /= 10;
    }
    return s;
}

inline std::string to_string_signed(i128 v) {
    if (v < 0) return "-" + to_string(u128(-v));
    return to_string(u128(v));
}

// Ring width n and fraction bits d, fixed for the lifetime of a computation.
struct RingConfig {
    int n = 128;
    int d = 40;

    RingConfig() = default;
    RingConfig(int n_bits, int frac_bits) : n(n_bits), d(frac_bits) {
        if (n < 2 || n > 128) throw DomainError("ring width must be in [2,128], got " + std::to_string(n));
        if (d < 0 || d >= n) throw DomainError("fraction bits must satisfy 0 <= d < n");
    }

    u128 mask() const { return n == 128 ? ~u128(0) : (u128(1) << n) - 1; }
    u128 sign_bit() const { return u128(1) << (n - 1); }
    // Serialized element width on the wire.
    int elem_bytes() const { return (n + 7) / 8; }
    u128 scale() const { return u128(1) << d; }
};

inline u128 ring_reduce(const RingConfig& cfg, u128 v) { return v & cfg.mask(); }

inline u128 ring_add(const RingConfig& cfg, u128 a, u128 b) { return (a + b) & cfg.mask(); }

inline u128 ring_sub(const RingConfig& cfg, u128 a, u128 b) { return (a - b) & cfg.mask(); }

inline u128 ring_neg(const RingConfig& cfg, u128 a) { return (~a + 1) & cfg.mask(); }

inline u128 ring_mul(const RingConfig& cfg, u128 a, u128 b) { return (a * b) & cfg.mask(); }

// Two's-complement interpretation of a ring element.
inline i128 ring_signed(const RingConfig& cfg, u128 v) {
    v &= cfg.mask();
    if (v & cfg.sign_bit()) {
        if (cfg.n == 128) return i128(v);
        return i128(v) - (i128(1) << cfg.n);
    }
    return i128(v);
}

inline u128 ring_from_signed(const RingConfig& cfg, i128 v) { return u128(v) & cfg.mask(); }

// Sign-extending right shift of the two's-complement interpretation,
// re-reduced mod 2^n.  This is the paper-style x / 2^d.
inline u128 arith_shift_right(const RingConfig& cfg, u128 v, int shift) {
    if (shift == 0) return v & cfg.mask();
    u128 x = v & cfg.mask();
    if (cfg.n < 128 && (x & cfg.sign_bit())) x |= ~cfg.mask(); // extend sign to 128 bits
    i128 s = i128(x);
    return u128(s >> shift) & cfg.mask();
}

inline int ring_bit(u128 v, int k) { return int((v >> (k - 1)) & 1); } // k is 1-based

// A ring element together with its fixed-point configuration.
struct FixedPoint {
    u128 raw = 0;
    RingConfig cfg;
};

// raw = floor(v * 2^d) reduced mod 2^n; |v| < 2^(n-1-d) or OverflowError.
inline u128 encode_fixed(const RingConfig& cfg, double v) {
    if (!std::isfinite(v)) throw OverflowError("cannot encode non-finite value");
    double limit = std::ldexp(1.0, cfg.n - 1 - cfg.d);
    if (!(v > -limit && v < limit))
        throw OverflowError("fixed-point encode overflow: |" + std::to_string(v) + "| >= 2^" +
                            std::to_string(cfg.n - 1 - cfg.d));
    double scaled = std::floor(std::ldexp(v, cfg.d));
    return ring_from_signed(cfg, i128(scaled));
}

inline double decode_fixed(const RingConfig& cfg, u128 raw) {
    return std::ldexp(double(ring_signed(cfg, raw)), -cfg.d);
}

inline FixedPoint encode_fixed_point(const RingConfig& cfg, double v) {
    return FixedPoint{encode_fixed(cfg, v), cfg};
}

inline double decode_fixed_point(const FixedPoint& f) { return decode_fixed(f.cfg, f.raw); }

} // namespace quadshare
