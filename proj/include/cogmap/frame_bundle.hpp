#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <utility>
#include <vector>

#include "cogmap/error.hpp"

namespace cogmap {

// One visual patch: semantic feature, spatial feature, pooled 3D coordinate
// in relative metric units (pre-recentering), geometric confidence, and the
// frame it was observed in. Coordinates are stored single precision to match
// the on-disk record exactly; map construction promotes to double.
struct PatchToken {
    std::vector<float> visual_feature;
    std::vector<float> spatial_feature;
    std::array<float, 3> coordinate{};
    float confidence = 0.0f;        // in [0, 1]
    std::uint32_t timestamp = 0;    // frame index
    std::uint64_t global_index = 0; // position in the flattened sequence
};

// All patch tokens of one clip, frame-major. Every frame carries exactly
// patches_per_frame tokens; frames that see less real content pad with
// zero-confidence filler tokens, mirroring encoders that emit a constant
// patch count per image.
struct FrameBundle {
    std::uint32_t frame_count = 0;      // N
    std::uint32_t patches_per_frame = 0; // M_v
    std::uint32_t dim_visual = 0;       // D_v
    std::uint32_t dim_spatial = 0;      // D_s
    std::vector<std::uint32_t> frame_timestamps; // length N, nondecreasing
    std::vector<PatchToken> tokens;     // N * M_v

    std::uint64_t token_count() const {
        return static_cast<std::uint64_t>(frame_count) * patches_per_frame;
    }

    // Throws FormatError when any structural invariant fails: token count,
    // per-token dims, global_index = position, token timestamp = its frame's
    // timestamp, nondecreasing frame timestamps, confidence range, finite
    // coordinates.
    void validate() const;
};

// Dense per-pixel geometry before pooling to patch resolution.
struct DenseFrame {
    std::size_t height = 0;
    std::size_t width = 0;
    std::vector<float> point_map;      // height * width * 3, row-major xyz
    std::vector<float> confidence_map; // height * width
    std::size_t patch_size = 1;
};

// Unweighted per-block means in raster order, accumulated in double.
// Outputs stay double so mean linearity is exact for grid-aligned inputs.
std::pair<std::vector<std::array<double, 3>>, std::vector<double>>
pool_dense_to_patches(const DenseFrame& frame);

// Bundle file layout, little-endian:
//   magic "CMF1"; u32 N, M_v, D_v, D_s;
//   per frame: u32 timestamp, then M_v records of
//     f32 visual[D_v], f32 spatial[D_s], f32 coord[3], f32 confidence.
// Fixed-stride records; write/read/write is byte-identical.
std::vector<std::uint8_t> encode_frame_bundle(const FrameBundle& bundle);
FrameBundle decode_frame_bundle(const std::vector<std::uint8_t>& bytes);
void write_frame_bundle(const FrameBundle& bundle,
                        const std::filesystem::path& path);
FrameBundle read_frame_bundle(const std::filesystem::path& path);

} // namespace cogmap
