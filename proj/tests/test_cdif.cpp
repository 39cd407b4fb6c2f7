#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "cogmap/cdif.hpp"
#include "cogmap/map_builder.hpp"
#include "cogmap/rng.hpp"
#include "cogmap/verify.hpp"

using namespace cogmap;

namespace {

MatrixD random_mat(Rng& rng, std::size_t r, std::size_t c) {
    MatrixD m(r, c);
    for (double& v : m.data)
        v = rng.normal();
    return m;
}

std::vector<std::array<double, 3>> random_coords(Rng& rng, std::size_t n) {
    std::vector<std::array<double, 3>> out(n);
    for (auto& c : out)
        for (int a = 0; a < 3; ++a)
            c[a] = rng.uniform(-1.5, 1.5);
    return out;
}

FusionStateD random_state(std::uint64_t seed, std::uint32_t tokens,
                          std::uint32_t cells, std::uint32_t dv,
                          std::uint32_t ds) {
    Rng rng(seed * 2 + 1);
    FusionStateD st;
    st.visual = random_mat(rng, tokens, dv);
    st.visual_coords = random_coords(rng, tokens);
    st.map = random_mat(rng, cells, dv + ds);
    st.map_coords = random_coords(rng, cells);
    return st;
}

} // namespace

TEST_SUITE("cdif") {

TEST_CASE("even split covers the head and favors x then y") {
    CHECK(Rope3dConfig::even_split(6).axis_pairs ==
          std::array<std::uint32_t, 3>{1, 1, 1});
    CHECK(Rope3dConfig::even_split(8).axis_pairs ==
          std::array<std::uint32_t, 3>{2, 1, 1});
    CHECK(Rope3dConfig::even_split(10).axis_pairs ==
          std::array<std::uint32_t, 3>{2, 2, 1});
    CHECK(Rope3dConfig::even_split(4).axis_pairs ==
          std::array<std::uint32_t, 3>{1, 1, 0});
    CHECK(Rope3dConfig::even_split(12).axis_pairs ==
          std::array<std::uint32_t, 3>{2, 2, 2});
    CHECK_THROWS_AS(Rope3dConfig::even_split(3).validate(), ConfigError);
}

TEST_CASE("rope preserves norms and fixes the zero coordinate") {
    Rng rng(77);
    const Rope3dConfig cfg = Rope3dConfig::even_split(8);
    const MatrixD x = random_mat(rng, 3, 16); // two head blocks
    const std::vector<std::array<double, 3>> zero(3, {0.0, 0.0, 0.0});
    const MatrixD same = rope3d_apply(x, zero, cfg);
    for (std::size_t i = 0; i < x.data.size(); ++i)
        CHECK(same.data[i] == x.data[i]); // angle 0: exact identity

    const auto coords = random_coords(rng, 3);
    const MatrixD rot = rope3d_apply(x, coords, cfg);
    for (std::size_t i = 0; i < 3; ++i) {
        double a = 0.0, b = 0.0;
        for (std::size_t j = 0; j < 16; ++j) {
            a += x.at(i, j) * x.at(i, j);
            b += rot.at(i, j) * rot.at(i, j);
        }
        CHECK(b == doctest::Approx(a).epsilon(1e-12));
    }
}

TEST_CASE("rope relative identity spot check") {
    Rng rng(78);
    const Rope3dConfig cfg = Rope3dConfig::even_split(6, 1000.0, 0.5);
    const MatrixD x = random_mat(rng, 1, 6);
    const MatrixD y = random_mat(rng, 1, 6);
    const std::array<double, 3> pa = {0.3, -1.1, 2.0};
    const std::array<double, 3> pb = {-0.7, 0.4, 1.2};
    const MatrixD xr = rope3d_apply(x, {pa}, cfg);
    const MatrixD yr = rope3d_apply(y, {pb}, cfg);
    const MatrixD xd = rope3d_apply(
        x, {{pa[0] - pb[0], pa[1] - pb[1], pa[2] - pb[2]}}, cfg);
    double lhs = 0.0, rhs = 0.0;
    for (std::size_t j = 0; j < 6; ++j) {
        lhs += xr.at(0, j) * yr.at(0, j);
        rhs += xd.at(0, j) * y.at(0, j);
    }
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
}

TEST_CASE("zero parameters make the whole stack an identity") {
    for (std::uint64_t seed : {1ull, 2ull}) {
        const CdifParamsD params = make_zero_cdif_params<double>(8, 4, 2, 2);
        FusionStateD st = random_state(seed, 5, 7, 8, 4);
        const MatrixD before = st.visual;
        const MatrixD& after = cdif_forward(st, params);
        REQUIRE(after.same_shape(before));
        for (std::size_t i = 0; i < before.data.size(); ++i)
            CHECK(after.data[i] == before.data[i]);
        CHECK(st.layer_index == 2);
    }
}

TEST_CASE("map residual keeps the map when self attention is zero") {
    const CdifParamsD params = make_zero_cdif_params<double>(4, 4, 1, 2);
    FusionStateD st = random_state(3, 4, 6, 4, 4);
    const MatrixD before = st.map;
    cdif_forward(st, params);
    for (std::size_t i = 0; i < before.data.size(); ++i)
        CHECK(st.map.data[i] == before.data[i]);
}

TEST_CASE("map token permutation leaves the visual output unchanged") {
    const CdifParamsD params = make_random_cdif_params<double>(6, 2, 2, 2, 11);
    FusionStateD st = random_state(4, 5, 6, 6, 2);
    FusionStateD permuted = st;
    // Rotate the map rows and coordinates together.
    const std::size_t n = permuted.map.rows;
    MatrixD rot(n, permuted.map.cols);
    std::vector<std::array<double, 3>> rot_coords(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t src = (i + 2) % n;
        for (std::size_t j = 0; j < permuted.map.cols; ++j)
            rot.at(i, j) = permuted.map.at(src, j);
        rot_coords[i] = permuted.map_coords[src];
    }
    permuted.map = rot;
    permuted.map_coords = rot_coords;

    const MatrixD& a = cdif_forward(st, params);
    const MatrixD& b = cdif_forward(permuted, params);
    for (std::size_t i = 0; i < a.data.size(); ++i)
        CHECK(a.data[i] == doctest::Approx(b.data[i]).epsilon(1e-10));
}

TEST_CASE("gate output stays strictly between the clamp rails") {
    Rng rng(12);
    const MatrixD x = random_mat(rng, 4, 5);
    const MatrixD g = sigmoid_map(x);
    for (double v : g.data) {
        CHECK(v > 0.0);
        CHECK(v < 1.0);
    }
}

TEST_CASE("make_fusion_state lays tokens out in global order") {
    const FrameBundle bundle = random_test_bundle(44, 2, 6, 4, 4, 1.0);
    MapConfig cfg;
    cfg.grid_extent = 10;
    cfg.resolution = 0.4;
    const CognitiveMap map = build_map(bundle, cfg);
    const CdifParams params = make_zero_cdif_params<float>(4, 4, 1, 2);
    const FusionState st = make_fusion_state(bundle, map, params);
    REQUIRE(st.visual.rows == bundle.tokens.size());
    REQUIRE(st.map.rows == map.cells.size());
    for (std::size_t i = 0; i < bundle.tokens.size(); ++i)
        for (std::size_t j = 0; j < 4; ++j)
            CHECK(st.visual.at(i, j) == bundle.tokens[i].visual_feature[j]);
    for (std::size_t i = 0; i < bundle.tokens.size(); ++i)
        for (int a = 0; a < 3; ++a)
            CHECK(st.visual_coords[i][a] ==
                  static_cast<double>(bundle.tokens[i].coordinate[a]) -
                      map.center[a]);
    for (std::size_t i = 0; i < map.cells.size(); ++i)
        CHECK(st.map_coords[i] == map.cells[i].coordinate);
}

TEST_CASE("make_fusion_state rejects width mismatches") {
    const FrameBundle bundle = random_test_bundle(45, 1, 5, 4, 2, 1.0);
    MapConfig cfg;
    cfg.grid_extent = 10;
    cfg.resolution = 0.4;
    const CognitiveMap map = build_map(bundle, cfg);
    const CdifParams wrong = make_zero_cdif_params<float>(6, 2, 1, 2);
    CHECK_THROWS_AS(make_fusion_state(bundle, map, wrong), ConfigError);
}

TEST_CASE("random params are deterministic per seed") {
    const CdifParams a = make_random_cdif_params<float>(6, 2, 2, 2, 5);
    const CdifParams b = make_random_cdif_params<float>(6, 2, 2, 2, 5);
    const CdifParams c = make_random_cdif_params<float>(6, 2, 2, 2, 6);
    CHECK(encode_cdif_params(a) == encode_cdif_params(b));
    CHECK(encode_cdif_params(a) != encode_cdif_params(c));
}

TEST_CASE("validation rejects inconsistent head counts") {
    CdifParamsD p = make_zero_cdif_params<double>(8, 4, 1, 2);
    p.layers[0].heads = 5; // 12 % 5 != 0
    CHECK_THROWS_AS(p.validate(), ConfigError);
    p = make_zero_cdif_params<double>(8, 4, 1, 2);
    p.layers[0].rope.head_dim = 4; // stale after the heads change
    CHECK_THROWS_AS(p.validate(), ConfigError);
}

TEST_CASE("forward layer count matches params") {
    const CdifParamsD params = make_random_cdif_params<double>(4, 4, 3, 2, 8);
    FusionStateD st = random_state(9, 3, 4, 4, 4);
    cdif_forward(st, params);
    CHECK(st.layer_index == 3);
}

} // TEST_SUITE
