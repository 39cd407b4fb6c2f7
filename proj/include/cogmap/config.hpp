#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "cogmap/cognitive_map.hpp"
#include "cogmap/scene.hpp"

namespace cogmap {

struct CdifSettings {
    std::uint32_t layers = 2;
    std::uint32_t heads = 4;
    std::uint64_t seed = 0;
    double frequency_base = 10000.0;
    double coordinate_scale = 1.0;
};

struct RunSettings {
    std::string out;    // default output path, overridable on the command line
    int verbosity = 1;  // 0 quiet, 1 normal
};

// Everything the CLI can read from a config file. Each subcommand consumes
// the sections it cares about and ignores the rest.
struct ToolConfig {
    SceneSpec scene;
    MapConfig map;
    CdifSettings cdif;
    RunSettings run;
};

// INI-style text: [section] headers, key = value lines, # or ; comments.
// Sections: [scene] objects, extent, points_per_object, feature_noise,
// coordinate_noise, frames, seed, dim_visual, dim_spatial; [map] grid_extent,
// resolution, conf_threshold, sim_threshold, max_voxels, seed,
// insert_low_confidence; [cdif] layers, heads, seed, frequency_base,
// coordinate_scale; [run] out, verbosity. Unknown sections or keys throw
// UsageError; every field has a default, so the empty string is valid.
ToolConfig parse_config_text(const std::string& text);
ToolConfig load_config_file(const std::filesystem::path& path);

} // namespace cogmap
