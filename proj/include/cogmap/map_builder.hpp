#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "cogmap/cognitive_map.hpp"
#include "cogmap/frame_bundle.hpp"

namespace cogmap {

// Per-run construction counters, reported by the CLI as key=value pairs.
struct BuildStats {
    std::uint64_t tokens_in = 0;
    std::uint64_t dropped_low_confidence = 0;
    std::uint64_t dropped_out_of_bounds = 0;
    std::uint64_t bins = 0;    // occupied voxels before down-sampling
    std::uint64_t sampled = 0; // cells after down-sampling
};

// Mean coordinate over tokens with confidence strictly above the threshold,
// accumulated in double in ascending global_index order. Throws
// NoConfidentGeometryError when no token qualifies.
std::array<double, 3> compute_scene_center(const std::vector<PatchToken>& tokens,
                                           double conf_threshold);

struct QuantizeResult {
    std::array<std::int64_t, 3> index{}; // floor((P - c) / r) + D/2, per axis
    bool in_bounds = false;              // every component in [0, D-1]
};

QuantizeResult quantize(const std::array<double, 3>& coordinate,
                        const std::array<double, 3>& center, double resolution,
                        std::uint32_t grid_extent);

// h = u_x D^2 + u_y D + u_z in 64-bit arithmetic. Components must already be
// inside the grid.
std::uint64_t hash_voxel(const std::array<std::uint32_t, 3>& u,
                         std::uint32_t grid_extent);

// One token's contribution to a bin: concatenated feature, recentered
// coordinate, timestamp. Kept separate from PatchToken so the aggregation
// oracle can be fed directly.
struct BinToken {
    std::vector<float> feature;         // concat(visual, spatial)
    std::array<double, 3> coordinate{}; // recentered, double precision
    std::uint32_t timestamp = 0;
    std::uint64_t global_index = 0;
};

// Scatter-mean over one bin with the cosine outlier filter: centroid of the
// full bin, drop tokens whose cosine to it is not strictly above
// sim_threshold, fall back to the full bin when the refined set is empty or
// the centroid has zero norm. A zero-norm token scores cosine 0. Means are
// double precision in ascending global_index order; the caller passes tokens
// already in that order.
VoxelCell aggregate_bin(std::span<const BinToken> bin, double sim_threshold,
                        const std::array<std::uint32_t, 3>& voxel_index,
                        std::uint32_t grid_extent);

// Uniform down-sample without replacement to at most max_voxels cells,
// re-sorted by hash. Identity when the input already fits. Deterministic per
// (input, seed); the seed is stretched through the stream-derivation scheme
// so it does not collide with other consumers of the same master seed.
std::vector<VoxelCell> sample_map(std::vector<VoxelCell> cells,
                                  std::uint32_t max_voxels, std::uint64_t seed);

// Full pipeline: center over confident tokens, confidence filter, recenter,
// quantize, drop out-of-bounds, group by hash, aggregate bins, down-sample.
CognitiveMap build_map(const FrameBundle& bundle, const MapConfig& config,
                       BuildStats* stats = nullptr);

} // namespace cogmap
