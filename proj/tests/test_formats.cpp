#include "doctest.h"

#include <cstdint>
#include <filesystem>
#include <vector>

#include "cogmap/cdif.hpp"
#include "cogmap/cognitive_map.hpp"
#include "cogmap/frame_bundle.hpp"
#include "cogmap/io_util.hpp"
#include "cogmap/map_builder.hpp"
#include "cogmap/verify.hpp"

using namespace cogmap;

TEST_SUITE("formats") {

TEST_CASE("byte writer is little-endian") {
    ByteWriter w;
    w.u32(0x01020304u);
    REQUIRE(w.bytes().size() == 4);
    CHECK(w.bytes()[0] == 0x04);
    CHECK(w.bytes()[1] == 0x03);
    CHECK(w.bytes()[2] == 0x02);
    CHECK(w.bytes()[3] == 0x01);
    w.f32(1.0f); // 0x3f800000
    CHECK(w.bytes()[4] == 0x00);
    CHECK(w.bytes()[7] == 0x3f);
}

TEST_CASE("byte reader round trips every width") {
    ByteWriter w;
    w.u8(0xAB);
    w.u32(123456789u);
    w.u64(0x1122334455667788ull);
    w.f32(-2.5f);
    w.f64(3.141592653589793);
    ByteReader r(w.bytes().data(), w.bytes().size());
    CHECK(r.u8() == 0xAB);
    CHECK(r.u32() == 123456789u);
    CHECK(r.u64() == 0x1122334455667788ull);
    CHECK(r.f32() == -2.5f);
    CHECK(r.f64() == 3.141592653589793);
    CHECK(r.at_end());
}

TEST_CASE("empty bundle encodes to exactly 20 bytes") {
    FrameBundle b;
    b.frame_count = 0;
    b.patches_per_frame = 0;
    b.dim_visual = 3;
    b.dim_spatial = 2;
    const auto bytes = encode_frame_bundle(b);
    REQUIRE(bytes.size() == 20);
    CHECK(bytes[0] == 'C');
    CHECK(bytes[1] == 'M');
    CHECK(bytes[2] == 'F');
    CHECK(bytes[3] == '1');
    const FrameBundle back = decode_frame_bundle(bytes);
    CHECK(back.dim_visual == 3);
    CHECK(back.dim_spatial == 2);
    CHECK(back.tokens.empty());
}

TEST_CASE("single token bundle with dims 2+1 is 52 bytes") {
    FrameBundle b;
    b.frame_count = 1;
    b.patches_per_frame = 1;
    b.dim_visual = 2;
    b.dim_spatial = 1;
    b.frame_timestamps = {7};
    PatchToken t;
    t.visual_feature = {1.0f, 2.0f};
    t.spatial_feature = {3.0f};
    t.coordinate = {0.5f, -0.5f, 0.25f};
    t.confidence = 0.9f;
    t.timestamp = 7;
    t.global_index = 0;
    b.tokens.push_back(t);
    const auto bytes = encode_frame_bundle(b);
    CHECK(bytes.size() == 52);
    const FrameBundle back = decode_frame_bundle(bytes);
    REQUIRE(back.tokens.size() == 1);
    CHECK(back.tokens[0].visual_feature == t.visual_feature);
    CHECK(back.tokens[0].confidence == 0.9f);
    CHECK(back.frame_timestamps[0] == 7);
}

TEST_CASE("bundle round trip is byte identical") {
    for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
        const FrameBundle b = random_test_bundle(seed, 3, 17, 5, 4, 2.0);
        const auto bytes = encode_frame_bundle(b);
        const auto again = encode_frame_bundle(decode_frame_bundle(bytes));
        CHECK(bytes == again);
    }
}

TEST_CASE("bundle decode rejects corruption") {
    const FrameBundle b = random_test_bundle(11, 2, 5, 3, 2, 1.0);
    auto bytes = encode_frame_bundle(b);
    for (std::size_t i = 0; i < 4; ++i) {
        auto bad = bytes;
        bad[i] ^= 0x01;
        CHECK_THROWS_AS(decode_frame_bundle(bad), FormatError);
    }
    auto truncated = bytes;
    truncated.pop_back();
    CHECK_THROWS_AS(decode_frame_bundle(truncated), FormatError);
    auto trailing = bytes;
    trailing.push_back(0);
    CHECK_THROWS_AS(decode_frame_bundle(trailing), FormatError);
    CHECK_THROWS_AS(decode_frame_bundle(std::vector<std::uint8_t>{}), FormatError);
}

TEST_CASE("map round trip is byte identical") {
    const FrameBundle b = random_test_bundle(21, 2, 40, 4, 3, 1.5);
    MapConfig cfg;
    cfg.grid_extent = 10;
    cfg.resolution = 0.4;
    const CognitiveMap m = build_map(b, cfg);
    const auto bytes = encode_map(m);
    const CognitiveMap back = decode_map(bytes);
    CHECK(maps_bitwise_equal(m, back));
    CHECK(encode_map(back) == bytes);
}

TEST_CASE("map decode rejects corruption") {
    const FrameBundle b = random_test_bundle(22, 1, 30, 3, 2, 1.0);
    MapConfig cfg;
    cfg.grid_extent = 10;
    cfg.resolution = 0.4;
    auto bytes = encode_map(build_map(b, cfg));
    auto bad = bytes;
    bad[0] = 'X';
    CHECK_THROWS_AS(decode_map(bad), FormatError);
    auto bad_version = bytes;
    bad_version[4] = 2;
    CHECK_THROWS_AS(decode_map(bad_version), FormatError);
    auto truncated = bytes;
    truncated.resize(truncated.size() - 3);
    CHECK_THROWS_AS(decode_map(truncated), FormatError);
}

TEST_CASE("parameter file round trip is byte identical") {
    const CdifParams zero = make_zero_cdif_params<float>(6, 2, 2, 2);
    const auto zb = encode_cdif_params(zero);
    CHECK(encode_cdif_params(decode_cdif_params(zb)) == zb);

    const CdifParams rnd = make_random_cdif_params<float>(6, 2, 3, 4, 99);
    const auto rb = encode_cdif_params(rnd);
    const CdifParams back = decode_cdif_params(rb);
    CHECK(encode_cdif_params(back) == rb);
    CHECK(back.layers.size() == 3);
    CHECK(back.layers[0].heads == 4);
}

TEST_CASE("parameter decode rejects corruption") {
    auto bytes = encode_cdif_params(make_zero_cdif_params<float>(4, 4, 1, 2));
    auto bad = bytes;
    bad[2] ^= 0xFF;
    CHECK_THROWS_AS(decode_cdif_params(bad), FormatError);
    auto truncated = bytes;
    truncated.resize(truncated.size() / 2);
    CHECK_THROWS_AS(decode_cdif_params(truncated), FormatError);
    auto trailing = bytes;
    trailing.push_back(1);
    CHECK_THROWS_AS(decode_cdif_params(trailing), FormatError);
}

TEST_CASE("file io round trip") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "cogmap-io-test";
    fs::create_directories(dir);
    const fs::path p = dir / "bundle.cmf1";
    const FrameBundle b = random_test_bundle(31, 2, 9, 4, 2, 1.0);
    write_frame_bundle(b, p);
    const FrameBundle back = read_frame_bundle(p);
    CHECK(encode_frame_bundle(back) == encode_frame_bundle(b));
    CHECK_THROWS_AS(read_frame_bundle(dir / "missing.cmf1"), FormatError);
    fs::remove_all(dir);
}

} // TEST_SUITE
