#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <random>

#include "quadshare/large_array.hpp"
#include "quadshare/sharing.hpp"
#include "quadshare/tensor_ops.hpp"
#include "test_util.hpp"

using namespace quadshare;
using qstest::opts;

TEST_CASE("large array round trip") {
    Engine eng(opts(128, 40, 51));
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> dist(-100.0, 100.0);
    std::vector<double> vals(40 * 6);
    for (auto& v : vals) v = dist(rng);
    ShareTensor t = ss(eng, 0, vals, Shape{40, 6});

    std::string path = "/tmp/qs_large_array_test.bin";
    LargeArray la(path, eng.cfg(), t);
    std::vector<std::size_t> all(40);
    for (std::size_t i = 0; i < 40; ++i) all[i] = i;
    ShareTensor back = la.get_batch(all);
    REQUIRE(back.shape == t.shape);
    for (int p = 0; p < 4; ++p) {
        CHECK(back.party[p].first == t.party[p].first);
        CHECK(back.party[p].second == t.party[p].second);
    }
    std::remove(path.c_str());
}

TEST_CASE("random batches from a file-backed array equal in-memory slices") {
    Engine eng(opts(128, 40, 52));
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    const std::size_t rows = 10000, cols = 64;
    std::vector<double> vals(rows * cols);
    for (auto& v : vals) v = dist(rng);
    ShareTensor t = ss(eng, 0, vals, Shape{rows, cols});

    std::string path = "/tmp/qs_large_array_batch.bin";
    // Small chunks force the scan across many chunk boundaries.
    LargeArray la(path, eng.cfg(), t, /*chunk_bytes=*/48 * 1024);
    CHECK(la.chunk_rows() < rows);

    std::vector<std::size_t> batch;
    for (int i = 0; i < 37; ++i) batch.push_back(std::size_t(rng() % rows));
    ShareTensor got = la.get_batch(batch);
    REQUIRE(got.shape == Shape{batch.size(), cols});

    for (std::size_t bi = 0; bi < batch.size(); ++bi) {
        ShareTensor expect = slice_axis0(t, batch[bi], batch[bi] + 1);
        for (int p = 0; p < 4; ++p)
            for (std::size_t j = 0; j < cols; ++j) {
                CHECK(got.party[p].first[bi * cols + j] == expect.party[p].first[j]);
                CHECK(got.party[p].second[bi * cols + j] == expect.party[p].second[j]);
            }
    }

    // Values survive the disk trip bit-exactly.
    auto revealed = reveal(eng, got);
    for (std::size_t bi = 0; bi < batch.size(); ++bi)
        for (std::size_t j = 0; j < cols; ++j) {
            double orig = vals[batch[bi] * cols + j];
            CHECK(std::abs(revealed[bi * cols + j] - orig) < std::ldexp(1.0, -40));
        }
    std::remove(path.c_str());
}

TEST_CASE("disk IO time is surfaced separately") {
    Engine eng(opts(128, 40, 53));
    std::vector<double> vals(256, 1.0);
    ShareTensor t = ss(eng, 0, vals, Shape{64, 4});
    std::string path = "/tmp/qs_large_array_io.bin";
    LargeArray la(path, eng.cfg(), t);
    CHECK(la.io_ms() == 0.0);
    NetStats before = eng.net().snapshot();
    (void)la.get_batch({0, 63, 17});
    NetStats d = stats_diff(before, eng.net().snapshot());
    CHECK(d.total_rounds == 0);      // disk access is not communication
    CHECK(la.io_ms() >= 0.0);        // accumulated read time, reported apart
    std::remove(path.c_str());
}

TEST_CASE("large array error paths") {
    Engine eng(opts(128, 40, 54));
    ShareTensor t = ss(eng, 0, {1.0, 2.0}, Shape{2});
    CHECK_THROWS_AS(LargeArray("/tmp/qs_la_scalar.bin", eng.cfg(), ss(eng, 0, {1.0}, Shape{})), ShapeError);

    std::string path = "/tmp/qs_la_err.bin";
    LargeArray la(path, eng.cfg(), t);
    CHECK_THROWS_AS(la.get_batch({5}), IoError);
    CHECK_THROWS_AS(LargeArray(path, eng.cfg(), Shape{3}), IoError); // size mismatch
    CHECK_THROWS_AS(LargeArray("/tmp/qs_missing_la.bin", eng.cfg(), Shape{2}), IoError);
    std::remove(path.c_str());
}
