#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <string>
#include <sys/wait.h>

#include "cogmap/cognitive_map.hpp"
#include "cogmap/config.hpp"
#include "cogmap/frame_bundle.hpp"
#include "cogmap/io_util.hpp"
#include "cogmap/map_builder.hpp"
#include "cogmap/scene.hpp"

using namespace cogmap;
namespace fs = std::filesystem;

namespace {

// Build system injects the binary location.
const char* cli_path() { return COGMAP_CLI_PATH; }

int run_cli(const std::string& args) {
    const std::string cmd =
        std::string(cli_path()) + " " + args + " > /dev/null 2>&1";
    const int rc = std::system(cmd.c_str());
    REQUIRE(rc != -1);
    REQUIRE(WIFEXITED(rc));
    return WEXITSTATUS(rc);
}

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("cogmap-cli-" + std::to_string(::getpid()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string file(const char* name) const { return (path / name).string(); }
};

} // namespace

TEST_SUITE("cli") {

TEST_CASE("synth build query round trip") {
    TempDir dir;
    const std::string bundle = dir.file("scene.cmf1");
    const std::string map = dir.file("scene.cmap");
    CHECK(run_cli("synth --out " + bundle + " --seed 4") == 0);
    CHECK(fs::exists(bundle));
    CHECK(fs::exists(bundle + ".truth.txt"));
    CHECK(run_cli("build --in " + bundle + " --out " + map) == 0);
    CHECK(fs::exists(map));
    CHECK(run_cli("query --map " + map + " --truth " + bundle +
                  ".truth.txt --kind appearance-order") == 0);
    CHECK(run_cli("query --map " + map + " --truth " + bundle +
                  ".truth.txt --kind object-distance --a 0 --b 1") == 0);
    CHECK(run_cli("query --map " + map + " --truth " + bundle +
                  ".truth.txt --kind voxel-count") == 0);
}

TEST_CASE("cli build matches the library byte for byte") {
    TempDir dir;
    const std::string bundle_path = dir.file("scene.cmf1");
    const std::string map_path = dir.file("scene.cmap");
    REQUIRE(run_cli("synth --out " + bundle_path + " --seed 9") == 0);
    REQUIRE(run_cli("build --in " + bundle_path + " --out " + map_path) == 0);

    SceneSpec spec; // CLI defaults
    spec.seed = 9;
    const auto [bundle, truth] = generate_scene(spec);
    CHECK(read_file_bytes(bundle_path) == encode_frame_bundle(bundle));

    const CognitiveMap map = build_map(bundle, MapConfig{});
    CHECK(read_file_bytes(map_path) == encode_map(map));
}

TEST_CASE("zero init fuse is the identity on the bundle file") {
    TempDir dir;
    const std::string bundle = dir.file("scene.cmf1");
    const std::string map = dir.file("scene.cmap");
    const std::string fused = dir.file("fused.cmf1");
    REQUIRE(run_cli("synth --out " + bundle + " --seed 12") == 0);
    REQUIRE(run_cli("build --in " + bundle + " --out " + map) == 0);
    CHECK(run_cli("fuse --map " + map + " --bundle " + bundle +
                  " --zero-init --out " + fused) == 0);
    CHECK(read_file_bytes(fused) == read_file_bytes(bundle));
}

TEST_CASE("random fuse writes reloadable params and changes features") {
    TempDir dir;
    const std::string bundle = dir.file("scene.cmf1");
    const std::string map = dir.file("scene.cmap");
    const std::string fused = dir.file("fused.cmf1");
    const std::string fused2 = dir.file("fused2.cmf1");
    const std::string params = dir.file("params.cdpf");
    REQUIRE(run_cli("synth --out " + bundle + " --seed 13") == 0);
    REQUIRE(run_cli("build --in " + bundle + " --out " + map) == 0);
    CHECK(run_cli("fuse --map " + map + " --bundle " + bundle + " --seed 3 " +
                  "--params-out " + params + " --out " + fused) == 0);
    CHECK(read_file_bytes(fused) != read_file_bytes(bundle));
    // Re-running from the saved parameter file reproduces the output exactly.
    CHECK(run_cli("fuse --map " + map + " --bundle " + bundle + " --params " +
                  params + " --out " + fused2) == 0);
    CHECK(read_file_bytes(fused2) == read_file_bytes(fused));
}

TEST_CASE("config file drives synthesis") {
    TempDir dir;
    const std::string cfg = dir.file("scene.ini");
    const std::string bundle = dir.file("scene.cmf1");
    write_file_bytes(cfg, [] {
        const std::string text =
            "[scene]\nobjects = 2\nframes = 4\npoints_per_object = 3\n"
            "dim_visual = 6\ndim_spatial = 2\nseed = 77\n";
        return std::vector<std::uint8_t>(text.begin(), text.end());
    }());
    REQUIRE(run_cli("synth --config " + cfg + " --out " + bundle) == 0);
    const FrameBundle b = read_frame_bundle(bundle);
    CHECK(b.frame_count == 4);
    CHECK(b.patches_per_frame == 6);
    CHECK(b.dim_visual == 6);
}

TEST_CASE("verify subcommand runs a single fast suite") {
    CHECK(run_cli("verify --suite quantize") == 0);
}

TEST_CASE("usage errors exit 2") {
    TempDir dir;
    CHECK(run_cli("flarble") == 2);
    CHECK(run_cli("build --out x.cmap") == 2); // missing --in
    CHECK(run_cli("verify --suite bogus") == 2);
    CHECK(run_cli("synth") == 2); // no --out, no config default
    const std::string cfg = dir.file("bad.ini");
    write_file_bytes(cfg, {'[', 'x', ']', '\n'});
    CHECK(run_cli("synth --config " + cfg + " --out " + dir.file("o")) == 2);
}

TEST_CASE("format errors exit 3") {
    TempDir dir;
    const std::string junk = dir.file("junk.cmf1");
    write_file_bytes(junk, {'J', 'U', 'N', 'K', 0, 0, 0, 0});
    CHECK(run_cli("build --in " + junk + " --out " + dir.file("x.cmap")) == 3);
    CHECK(run_cli("build --in " + dir.file("missing.cmf1") + " --out " +
                  dir.file("y.cmap")) == 3);
}

TEST_CASE("tampered truth digest exits 4") {
    TempDir dir;
    const std::string a = dir.file("a.cmf1");
    const std::string truth = a + ".truth.txt";
    const std::string map = dir.file("a.cmap");
    REQUIRE(run_cli("synth --out " + a + " --seed 1") == 0);
    REQUIRE(run_cli("build --in " + a + " --out " + map) == 0);

    // Flip one digest nibble; regeneration then disproves the sidecar.
    std::vector<std::uint8_t> bytes = read_file_bytes(truth);
    std::string text(bytes.begin(), bytes.end());
    const std::string key = "signature_digest = ";
    const auto pos = text.find(key);
    REQUIRE(pos != std::string::npos);
    char& nibble = text[pos + key.size()];
    nibble = nibble == '0' ? '1' : '0';
    write_file_bytes(truth, {text.begin(), text.end()});

    CHECK(run_cli("query --map " + map + " --truth " + truth +
                  " --kind appearance-order") == 4);
}

TEST_CASE("help exits 0") {
    CHECK(run_cli("--help") == 0);
    CHECK(run_cli("synth --help") == 0);
}

} // TEST_SUITE
