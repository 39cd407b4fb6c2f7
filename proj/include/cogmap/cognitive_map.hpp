#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "cogmap/error.hpp"

namespace cogmap {

// Map construction hyperparameters. Confidence comparison is strict
// (C > conf_threshold); the boundary value is excluded.
struct MapConfig {
    std::uint32_t grid_extent = 100; // D, voxels per axis, even
    double resolution = 0.04;        // r, voxel edge length
    double conf_threshold = 0.3;     // tau_conf in [0, 1]
    double sim_threshold = 0.5;      // tau_sim in [-1, 1]
    std::uint32_t max_voxels = 5000; // M_max
    std::uint64_t seed = 0;          // down-sampling stream
    bool insert_low_confidence = false;

    void validate() const; // throws ConfigError
};

// One occupied voxel after aggregation.
struct VoxelCell {
    std::vector<float> feature;               // concat(visual, spatial) mean
    std::array<double, 3> coordinate{};       // p_j, recentered frame
    std::uint32_t timestamp = 0;              // min over the refined set
    std::uint32_t occupancy = 0;              // refined-set size, >= 1
    std::array<std::uint32_t, 3> voxel_index{}; // u_j, each in [0, D)
    std::uint64_t hash = 0;                   // u_x D^2 + u_y D + u_z
};

// Allocentric voxel map: scene center plus hash-sorted cells.
struct CognitiveMap {
    std::array<double, 3> center{}; // c, subtracted from every coordinate
    MapConfig config;
    std::uint32_t feature_dim = 0;  // D_v + D_s
    std::vector<VoxelCell> cells;   // strictly ascending hash

    // Structural checks: sorted unique hashes, index ranges, hash formula,
    // occupancy >= 1, feature widths, cell count <= max_voxels.
    void validate() const; // throws ContractError
};

// Map file layout, little-endian:
//   magic "CMAP"; u32 version = 1; f64 center[3]; f64 resolution; u32 D;
//   u32 cell count; u32 feature dim;
//   per cell: u32 voxel_index[3], u64 hash, f64 coordinate[3],
//             u32 timestamp, u32 occupancy, f32 feature[dim].
// Only center, resolution and D of the config are part of the format;
// thresholds, sampling cap and seed are construction-time inputs and a map
// read back carries defaults for them.
std::vector<std::uint8_t> encode_map(const CognitiveMap& map);
CognitiveMap decode_map(const std::vector<std::uint8_t>& bytes);
void write_map(const CognitiveMap& map, const std::filesystem::path& path);
CognitiveMap read_map(const std::filesystem::path& path);

} // namespace cogmap
