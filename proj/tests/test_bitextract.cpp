#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "quadshare/protocols.hpp"
#include "quadshare/sharing.hpp"
#include "test_util.hpp"

using namespace quadshare;
using qstest::opts;

namespace {

// All 256 ring values shared as one batch.
ShareTensor share_all_bytes(Engine& eng) {
    std::vector<u128> raws(256);
    for (int v = 0; v < 256; ++v) raws[std::size_t(v)] = u128(v);
    return ss_raw(eng, 0, raws, Shape{256});
}

int rounds_for_extract(EngineOptions o, int k, bool ppa) {
    Engine eng(o);
    ShareTensor x = ss_raw(eng, 0, {u128(5)}, Shape{});
    NetStats before = eng.net().snapshot();
    if (ppa)
        (void)extract_bit_ppa(eng, x, k);
    else
        (void)extract_bit(eng, x, k);
    return int(stats_diff(before, eng.net().snapshot()).total_rounds);
}

} // namespace

TEST_CASE("bit extraction is exhaustively exact over Z_2^8 for every k") {
    for (int k = 1; k <= 8; ++k) {
        Engine eng(opts(8, 0, 100 + std::uint64_t(k)));
        ShareTensor x = share_all_bytes(eng);
        BitTensor c = extract_bit(eng, x, k);
        auto bits = reveal_bits(eng, c);
        for (int v = 0; v < 256; ++v) CHECK(int(bits[std::size_t(v)]) == ((v >> (k - 1)) & 1));
    }
}

TEST_CASE("half-shared mode extracts the same bits") {
    for (int k = 1; k <= 8; ++k) {
        EngineOptions o = opts(8, 0, 200 + std::uint64_t(k));
        o.extract_mode = BitExtractMode::half_shared;
        Engine eng(o);
        ShareTensor x = share_all_bytes(eng);
        auto bits = reveal_bits(eng, extract_bit(eng, x, k));
        for (int v = 0; v < 256; ++v) CHECK(int(bits[std::size_t(v)]) == ((v >> (k - 1)) & 1));
    }
}

TEST_CASE("parallel-prefix extraction agrees with the ripple adder exhaustively") {
    for (int k = 1; k <= 8; ++k) {
        Engine eng(opts(8, 0, 300 + std::uint64_t(k)));
        ShareTensor x = share_all_bytes(eng);
        auto ripple = reveal_bits(eng, extract_bit(eng, x, k));
        auto ppa = reveal_bits(eng, extract_bit_ppa(eng, x, k));
        CHECK(ripple == ppa);
        for (int v = 0; v < 256; ++v) CHECK(int(ppa[std::size_t(v)]) == ((v >> (k - 1)) & 1));
    }
}

TEST_CASE("sign bit of a negative value, LSB of five") {
    Engine eng(opts(128, 0, 9));
    ShareTensor minus_one = ss_raw(eng, 0, {ring_from_signed(eng.cfg(), -1)}, Shape{});
    CHECK(int(reveal_bits(eng, extract_bit(eng, minus_one, 128))[0]) == 1);

    ShareTensor five = ss_raw(eng, 0, {u128(5)}, Shape{});
    CHECK(int(reveal_bits(eng, extract_bit(eng, five, 1))[0]) == 1);
    CHECK(int(reveal_bits(eng, extract_bit(eng, five, 2))[0]) == 0);
    CHECK(int(reveal_bits(eng, extract_bit(eng, five, 3))[0]) == 1);
}

TEST_CASE("ripple extraction sends at most 2k bits per server") {
    for (int n : {8, 128}) {
        for (int k = 1; k <= n; k += (n == 8 ? 1 : 21)) {
            Engine eng(opts(n, 0, 40 + std::uint64_t(k)));
            ShareTensor x = ss_raw(eng, 0, {u128(123) & eng.cfg().mask()}, Shape{});
            NetStats before = eng.net().snapshot();
            (void)extract_bit(eng, x, k);
            NetStats d = stats_diff(before, eng.net().snapshot());
            for (int p = 0; p < kServerCount; ++p) CHECK(d[p].bits <= std::uint64_t(2 * k));
            CHECK(d[S1].bits == std::uint64_t(2 * k)); // k-bit mask + k-1 carries + final bit
        }
    }
}

TEST_CASE("half-shared extraction sends at most 1.5k bits per server") {
    for (int n : {8, 128}) {
        for (int k = 2; k <= n; k += (n == 8 ? 1 : 21)) {
            EngineOptions o = opts(n, 0, 50 + std::uint64_t(k));
            o.extract_mode = BitExtractMode::half_shared;
            Engine eng(o);
            ShareTensor x = ss_raw(eng, 0, {u128(77) & eng.cfg().mask()}, Shape{});
            NetStats before = eng.net().snapshot();
            (void)extract_bit(eng, x, k);
            NetStats d = stats_diff(before, eng.net().snapshot());
            for (int p = 0; p < kServerCount; ++p)
                CHECK(double(d[p].bits) <= 1.5 * double(k));
        }
    }
}

TEST_CASE("round counts: ripple k-1 carry rounds, prefix adder O(log k)") {
    // Ripple: mask round + (k-1) carry rounds + output round.
    CHECK(rounds_for_extract(opts(8, 0, 71), 8, false) == 1 + 7 + 1);
    CHECK(rounds_for_extract(opts(8, 0, 72), 1, false) == 2);
    CHECK(rounds_for_extract(opts(128, 0, 73), 64, false) == 1 + 63 + 1);

    // Prefix adder: input conversion + generate + ceil(log2(k-1)) levels.
    for (int k : {1, 2, 3, 8, 64, 128}) {
        int r = rounds_for_extract(opts(128, 0, 80 + std::uint64_t(k)), k, true);
        int bound = k == 1 ? 2 : 2 * int(std::ceil(std::log2(double(k)))) + 2;
        CHECK(r <= bound);
    }
    CHECK(rounds_for_extract(opts(128, 0, 90), 1, true) == 1); // no carry rounds at k=1

    int ppa64 = rounds_for_extract(opts(128, 0, 91), 64, true);
    int ripple64 = rounds_for_extract(opts(128, 0, 92), 64, false);
    CHECK(ppa64 < ripple64);
}

TEST_CASE("step a-c transcript satisfies u2 xor ua = x1 & x2") {
    Engine eng(opts(8, 0, 123));
    std::vector<u128> raws{u128(0xB7), u128(0x1C), u128(0xF0)};
    ShareTensor x = ss_raw(eng, 0, raws, Shape{3});
    BitExtractTranscript tr;
    (void)extract_bit(eng, x, 8, &tr);
    std::size_t m = 3;
    for (std::size_t j = 0; j < 8; ++j)
        for (std::size_t i = 0; i < m; ++i) {
            int x1bit = ring_bit(x.party[S1].first[i], int(j) + 1);
            int x2bit = ring_bit(x.party[S2].first[i], int(j) + 1);
            CHECK(int((tr.u2[j * m + i] ^ tr.ua[j * m + i]) & 1) == (x1bit & x2bit));
        }
}

TEST_CASE("extraction rejects out-of-range bit indices") {
    Engine eng(opts(16, 0, 4));
    ShareTensor x = ss_raw(eng, 0, {u128(1)}, Shape{});
    CHECK_THROWS_AS(extract_bit(eng, x, 0), DomainError);
    CHECK_THROWS_AS(extract_bit(eng, x, 17), DomainError);
    CHECK_THROWS_AS(extract_bit_ppa(eng, x, 17), DomainError);
}
