#include <catch2/catch_amalgamated.hpp>

#include <cstdint>
#include <random>

#include "quadshare/ring.hpp"

using namespace quadshare;

namespace {

// Frozen vectors computed with an arbitrary-precision integer oracle:
// { a, b, (a+b) mod 2^128, (a*b) mod 2^128 }.
struct WideVec {
    u128 a, b, sum, prod;
};
const WideVec kWide[] = {
    {make_u128(0x892f902bd23f0824ULL, 0x128b2f330c5c7fd0ULL), make_u128(0x6f03675a1600a35aULL, 0x099950d836f675ccULL),
     make_u128(0xf832f785e83fab7eULL, 0x1c24800b4352f59cULL), make_u128(0xd79e074c0a8df0c2ULL, 0x8c722cacd1ffe9c0ULL)},
    {make_u128(0x8d116ece1738f7d9ULL, 0x3d9c172411e20b8fULL), make_u128(0x658cda1495e60af5ULL, 0x93bd04cf0fd630f1ULL),
     make_u128(0xf29e48e2ad1f02ceULL, 0xd1591bf321b83c80ULL), make_u128(0xa3557cde120ba1b9ULL, 0x5d0452934281b19fULL)},
    {make_u128(0x881ed162ae2eb154ULL, 0x7f15052434b9b5dfULL), make_u128(0x3e7d1bfbc7a2ea20ULL, 0xb2f14c942e05319aULL),
     make_u128(0xc69bed5e75d19b75ULL, 0x320651b862bee779ULL), make_u128(0x72c3cbadde83293bULL, 0xf619c519e2e21726ULL)},
    {make_u128(0x830e07bc1e398f10ULL, 0x12bd4acefaecbd38ULL), make_u128(0xaa05e11ab2715945ULL, 0x795e8229451abd81ULL),
     make_u128(0x2d13e8d6d0aae855ULL, 0x8c1bccf840077ab9ULL), make_u128(0x51f6b73e68867859ULL, 0xeed58a9088adb138ULL)},
};

} // namespace

TEST_CASE("ring add wraps mod 2^n") {
    RingConfig cfg8(8, 4);
    CHECK(ring_add(cfg8, 200, 100) == 44); // 300 mod 256
    for (u128 a : {u128(0), u128(7), u128(255)}) CHECK(ring_add(cfg8, a, 0) == a);

    RingConfig cfg128(128, 40);
    for (const auto& v : kWide) CHECK(ring_add(cfg128, v.a, v.b) == v.sum);
}

TEST_CASE("ring mul wraps mod 2^n") {
    RingConfig cfg8(8, 4);
    CHECK(ring_mul(cfg8, 16, 16) == 0); // 256 mod 256
    for (u128 a : {u128(3), u128(100), u128(255)}) CHECK(ring_mul(cfg8, a, 1) == a);

    RingConfig cfg128(128, 40);
    for (const auto& v : kWide) CHECK(ring_mul(cfg128, v.a, v.b) == v.prod);
}

TEST_CASE("additive group laws hold exhaustively at n=8") {
    RingConfig cfg(8, 4);
    for (int a = 0; a < 256; ++a) {
        CHECK(ring_add(cfg, u128(a), 0) == u128(a));
        CHECK(ring_add(cfg, u128(a), ring_neg(cfg, u128(a))) == 0);
        for (int b = 0; b < 256; ++b) {
            CHECK(ring_add(cfg, u128(a), u128(b)) == ring_add(cfg, u128(b), u128(a)));
        }
    }
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 20000; ++trial) {
        u128 a = rng() & 0xff, b = rng() & 0xff, c = rng() & 0xff;
        CHECK(ring_add(cfg, ring_add(cfg, a, b), c) == ring_add(cfg, a, ring_add(cfg, b, c)));
    }
}

TEST_CASE("arithmetic shift matches the signed-integer oracle") {
    RingConfig cfg(8, 4);
    CHECK(arith_shift_right(cfg, 252, 2) == 255); // -4 >> 2 = -1
    CHECK(arith_shift_right(cfg, 77, 0) == 77);

    for (int v = 0; v < 256; ++v) {
        for (int d = 1; d < 8; ++d) {
            std::int8_t signed_v = std::int8_t(v);
            std::int8_t expect = std::int8_t(signed_v >> d);
            CHECK(arith_shift_right(cfg, u128(v), d) == (u128(std::uint8_t(expect))));
        }
    }

    RingConfig cfg128(128, 40);
    // floor(-12345678901234567890123 / 2^13) frozen from the integer oracle.
    u128 raw = make_u128(0xfffffffffffffd62ULL, 0xbd49b1898ebdbb35ULL);
    CHECK(arith_shift_right(cfg128, raw, 13) == make_u128(0xffffffffffffffffULL, 0xeb15ea4d8c4c75edULL));
}

TEST_CASE("fixed-point encode") {
    RingConfig cfg(8, 4);
    CHECK(encode_fixed(cfg, 1.5) == 24);
    CHECK(encode_fixed(cfg, -0.25) == 252);

    RingConfig big(128, 40);
    CHECK(encode_fixed(big, 0.3) == u128(329853488332ULL)); // floor(3*2^40/10)

    CHECK_THROWS_AS(encode_fixed(cfg, 8.0), OverflowError);   // 2^(8-1-4) = 8
    CHECK_THROWS_AS(encode_fixed(cfg, -9.0), OverflowError);
    CHECK_NOTHROW(encode_fixed(cfg, 7.9));
}

TEST_CASE("fixed-point decode") {
    RingConfig cfg(8, 4);
    CHECK(decode_fixed(cfg, 24) == 1.5);
    CHECK(decode_fixed(cfg, 252) == -0.25);
}

TEST_CASE("encode/decode round trip stays within 2^-d") {
    RingConfig cfg(128, 40);
    double ulp = std::ldexp(1.0, -cfg.d);
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> dist(-1e6, 1e6);
    for (int i = 0; i < 100000; ++i) {
        double v = dist(rng);
        double back = decode_fixed(cfg, encode_fixed(cfg, v));
        CHECK(std::abs(back - v) < ulp);
    }
}

TEST_CASE("shift-by-d undoes a 2^d pre-scale") {
    RingConfig cfg(128, 40);
    double ulp = std::ldexp(1.0, -cfg.d);
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> dist(-100.0, 100.0);
    for (int i = 0; i < 1000; ++i) {
        double v = dist(rng);
        u128 scaled = encode_fixed(cfg, std::ldexp(v, cfg.d));
        double back = decode_fixed(cfg, arith_shift_right(cfg, scaled, cfg.d));
        CHECK(std::abs(back - v) <= ulp);
    }
}

TEST_CASE("ring config validation") {
    CHECK_THROWS_AS(RingConfig(1, 0), DomainError);
    CHECK_THROWS_AS(RingConfig(129, 40), DomainError);
    CHECK_THROWS_AS(RingConfig(64, 64), DomainError);
    CHECK_THROWS_AS(RingConfig(64, -1), DomainError);
    CHECK_NOTHROW(RingConfig(128, 40));
    CHECK_NOTHROW(RingConfig(8, 0));
}
