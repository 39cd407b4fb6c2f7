#include "doctest.h"

#include "cogmap/config.hpp"
#include "cogmap/error.hpp"

using namespace cogmap;

TEST_SUITE("config") {

TEST_CASE("empty text yields defaults") {
    const ToolConfig c = parse_config_text("");
    CHECK(c.scene.object_count == 4);
    CHECK(c.map.grid_extent == 100);
    CHECK(c.map.resolution == 0.04);
    CHECK(c.cdif.layers == 2);
    CHECK(c.run.verbosity == 1);
    CHECK(c.run.out.empty());
}

TEST_CASE("full file parses") {
    const char* text =
        "# comment\n"
        "[scene]\n"
        "objects = 6\n"
        "extent = 0.9\n"
        "points_per_object = 5\n"
        "feature_noise = 0.02\n"
        "coordinate_noise = 0\n"
        "frames = 18\n"
        "seed = 42\n"
        "dim_visual = 12\n"
        "dim_spatial = 6\n"
        "\n"
        "[map]\n"
        "grid_extent = 64\n"
        "resolution = 0.1\n"
        "conf_threshold = 0.25\n"
        "sim_threshold = 0.4\n"
        "max_voxels = 900\n"
        "seed = 7\n"
        "insert_low_confidence = true\n"
        "; another comment\n"
        "[cdif]\n"
        "layers = 3\n"
        "heads = 6\n"
        "seed = 9\n"
        "frequency_base = 500\n"
        "coordinate_scale = 2.0\n"
        "[run]\n"
        "out = /tmp/x.bin\n"
        "verbosity = 0\n";
    const ToolConfig c = parse_config_text(text);
    CHECK(c.scene.object_count == 6);
    CHECK(c.scene.scene_extent == 0.9);
    CHECK(c.scene.points_per_object_per_frame == 5);
    CHECK(c.scene.coordinate_noise_sigma == 0.0);
    CHECK(c.scene.frames == 18);
    CHECK(c.scene.seed == 42);
    CHECK(c.scene.dim_visual == 12);
    CHECK(c.map.grid_extent == 64);
    CHECK(c.map.resolution == 0.1);
    CHECK(c.map.conf_threshold == 0.25);
    CHECK(c.map.sim_threshold == 0.4);
    CHECK(c.map.max_voxels == 900);
    CHECK(c.map.seed == 7);
    CHECK(c.map.insert_low_confidence);
    CHECK(c.cdif.layers == 3);
    CHECK(c.cdif.heads == 6);
    CHECK(c.cdif.frequency_base == 500.0);
    CHECK(c.cdif.coordinate_scale == 2.0);
    CHECK(c.run.out == "/tmp/x.bin");
    CHECK(c.run.verbosity == 0);
}

TEST_CASE("whitespace is tolerated") {
    const ToolConfig c =
        parse_config_text("  [map]  \n   resolution   =   0.5   \n");
    CHECK(c.map.resolution == 0.5);
}

TEST_CASE("unknown section is rejected") {
    CHECK_THROWS_AS(parse_config_text("[banana]\n"), UsageError);
}

TEST_CASE("unknown key is rejected") {
    CHECK_THROWS_AS(parse_config_text("[map]\nresolutoin = 0.1\n"), UsageError);
}

TEST_CASE("key outside a section is rejected") {
    CHECK_THROWS_AS(parse_config_text("resolution = 0.1\n"), UsageError);
}

TEST_CASE("malformed lines are rejected") {
    CHECK_THROWS_AS(parse_config_text("[map]\nresolution 0.1\n"), UsageError);
    CHECK_THROWS_AS(parse_config_text("[map\n"), UsageError);
}

TEST_CASE("bad values are rejected") {
    CHECK_THROWS_AS(parse_config_text("[map]\nresolution = tiny\n"), UsageError);
    CHECK_THROWS_AS(parse_config_text("[map]\nmax_voxels = -3\n"), UsageError);
    CHECK_THROWS_AS(parse_config_text("[map]\nmax_voxels = 1e3\n"), UsageError);
    CHECK_THROWS_AS(parse_config_text("[map]\ninsert_low_confidence = maybe\n"),
                    UsageError);
    CHECK_THROWS_AS(parse_config_text("[run]\nverbosity = 9\n"), UsageError);
}

} // TEST_SUITE
