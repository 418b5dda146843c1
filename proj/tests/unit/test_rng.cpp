#include "mats/parallel.hpp"
#include "mats/rng.hpp"

#include <catch_amalgamated.hpp>

#include <atomic>
#include <cmath>
#include <set>
#include <stdexcept>
#include <vector>

using namespace mats;

// Known-answer vectors for Philox4x32-10 (counter, key) -> block, from the
// reference distribution of the algorithm.
TEST_CASE("Philox4x32-10 known-answer vectors") {
    CHECK(Philox::encrypt({0, 0, 0, 0}, {0, 0}) ==
          Philox::Block{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u});
    CHECK(Philox::encrypt({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, {0xffffffffu, 0xffffffffu}) ==
          Philox::Block{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu});
    CHECK(Philox::encrypt({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u}) ==
          Philox::Block{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u});
}

TEST_CASE("Philox output is the encrypted counter sequence") {
    Philox rng(0, 0);
    const Philox::Block b0 = Philox::encrypt({0, 0, 0, 0}, {0, 0});
    const Philox::Block b1 = Philox::encrypt({1, 0, 0, 0}, {0, 0});
    CHECK(rng() == (std::uint64_t{b0[1]} << 32 | b0[0]));
    CHECK(rng() == (std::uint64_t{b0[3]} << 32 | b0[2]));
    CHECK(rng() == (std::uint64_t{b1[1]} << 32 | b1[0]));

    // Key and stream land in the key words and the high counter words.
    Philox keyed(0x299f31d0a4093822ull, 0x0370734413198a2eull);
    const Philox::Block k0 = Philox::encrypt({0, 0, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u});
    CHECK(keyed() == (std::uint64_t{k0[1]} << 32 | k0[0]));
}

TEST_CASE("Philox discard_blocks skips whole blocks") {
    Philox a(42, 7);
    Philox b(42, 7);
    for (int i = 0; i < 10; ++i) {
        (void)a();
    }
    b.discard_blocks(5);
    CHECK(a() == b());
}

TEST_CASE("Philox streams are reproducible and distinct") {
    Philox a(123, 1);
    Philox b(123, 1);
    Philox c(123, 2);
    Philox d(124, 1);
    std::vector<std::uint64_t> va, vb, vc, vd;
    for (int i = 0; i < 64; ++i) {
        va.push_back(a());
        vb.push_back(b());
        vc.push_back(c());
        vd.push_back(d());
    }
    CHECK(va == vb);
    CHECK(va != vc);
    CHECK(va != vd);
}

TEST_CASE("derive_stream is order sensitive and spreads ids") {
    CHECK(derive_stream({1, 2}) != derive_stream({2, 1}));
    CHECK(derive_stream({0}) != derive_stream({0, 0}));
    std::set<std::uint64_t> seen;
    for (std::uint64_t b = 0; b < 1000; ++b) {
        for (std::uint64_t g = 0; g < 4; ++g) {
            seen.insert(derive_stream({b, g}));
        }
    }
    CHECK(seen.size() == 4000);
}

TEST_CASE("uniform_open01 moments and range") {
    Philox rng(5, 5);
    const int n = 200000;
    double sum = 0.0;
    double sq = 0.0;
    for (int i = 0; i < n; ++i) {
        const double u = uniform_open01(rng);
        REQUIRE(u > 0.0);
        REQUIRE(u < 1.0);
        sum += u;
        sq += u * u;
    }
    const double mean = sum / n;
    const double var = sq / n - mean * mean;
    CHECK(std::abs(mean - 0.5) < 4.0 * std::sqrt(1.0 / 12.0 / n));
    CHECK(std::abs(var - 1.0 / 12.0) < 0.002);
}

TEST_CASE("parallel_for is deterministic and propagates exceptions") {
    for (unsigned workers : {1u, 2u, 4u, 0u}) {
        std::vector<std::uint64_t> out(500);
        parallel_for(out.size(), workers, [&](std::size_t i) {
            Philox rng(9, derive_stream({i}));
            out[i] = rng();
        });
        std::vector<std::uint64_t> ref(500);
        for (std::size_t i = 0; i < ref.size(); ++i) {
            Philox rng(9, derive_stream({i}));
            ref[i] = rng();
        }
        CHECK(out == ref);
    }
    std::atomic<int> calls{0};
    CHECK_THROWS_AS(parallel_for(100, 3,
                                 [&](std::size_t i) {
                                     ++calls;
                                     if (i == 17) {
                                         throw std::runtime_error("boom");
                                     }
                                 }),
                    std::runtime_error);
    parallel_for(0, 4, [&](std::size_t) { FAIL("no work expected"); });
}
