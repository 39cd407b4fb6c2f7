#include "doctest.h"

#include <bit>
#include <cstdint>

#include "cogmap/map_builder.hpp"
#include "cogmap/verify.hpp"

using namespace cogmap;

TEST_SUITE("verify") {

TEST_CASE("random bundles satisfy the bundle contract") {
    const FrameBundle b = random_test_bundle(3, 4, 11, 6, 3, 2.0);
    CHECK(b.tokens.size() == 44);
    CHECK(b.frame_timestamps.size() == 4);
    b.validate();
}

TEST_CASE("bitwise comparison catches a single flipped mantissa bit") {
    const FrameBundle b = random_test_bundle(8, 2, 30, 4, 2, 1.5);
    MapConfig cfg;
    cfg.grid_extent = 10;
    cfg.resolution = 0.4;
    CognitiveMap m1 = build_map(b, cfg);
    CognitiveMap m2 = build_map(b, cfg);
    CHECK(maps_bitwise_equal(m1, m2));
    REQUIRE(!m1.cells.empty());
    m2.cells[0].feature[0] =
        std::bit_cast<float>(std::bit_cast<std::uint32_t>(m2.cells[0].feature[0]) ^ 1u);
    CHECK_FALSE(maps_bitwise_equal(m1, m2));
}

TEST_CASE("naive pipeline agrees with the production pipeline") {
    for (std::uint64_t seed : {100ull, 101ull, 102ull, 103ull}) {
        const FrameBundle b = random_test_bundle(seed, 3, 40, 5, 3, 2.0);
        MapConfig cfg;
        cfg.grid_extent = 12;
        cfg.resolution = 0.3;
        cfg.seed = seed;
        CHECK(maps_bitwise_equal(build_map(b, cfg), naive_build_map(b, cfg)));
    }
}

TEST_CASE("quantize suite passes") {
    const SuiteResult r = run_quantize_exhaustive();
    INFO(r.detail);
    CHECK(r.passed);
}

TEST_CASE("rope suite passes") {
    const SuiteResult r = run_rope_identity();
    INFO(r.detail);
    CHECK(r.passed);
}

TEST_CASE("grad suite passes") {
    const SuiteResult r = run_grad_check();
    INFO(r.detail);
    CHECK(r.passed);
}

TEST_CASE("unknown suite name is a usage error") {
    CHECK_THROWS_AS(run_suite("bogus"), UsageError);
    CHECK(suite_names().size() == 5);
}

} // TEST_SUITE
