#pragma once

#include <array>
#include <cstdint>
#include <utility>
#include <vector>

#include "cogmap/frame_bundle.hpp"

namespace cogmap {

// Procedural scene: K sphere objects (radius 0.15) at uniformly placed
// centers with minimum separation 0.5, observed over N frames. Object k
// becomes visible at a scheduled frame (a seeded permutation of the stagger
// set floor(j * N / K)); from then on every frame re-observes the same
// canonical surface point set plus per-frame noise. Frames where an object
// is not yet visible pad its patch slots with zero-confidence filler tokens
// so every frame carries the same patch count.
struct SceneSpec {
    std::uint32_t object_count = 4; // K >= 2
    double scene_extent = 1.2;      // half-width of the placement cube
    std::uint32_t points_per_object_per_frame = 8;
    double feature_noise_sigma = 0.05;
    double coordinate_noise_sigma = 0.01;
    std::uint32_t frames = 12; // N, must be >= K for distinct schedule slots
    std::uint64_t seed = 0;
    std::uint32_t dim_visual = 16;
    std::uint32_t dim_spatial = 8;

    void validate() const; // throws ConfigError
};

struct GroundTruth {
    std::vector<std::array<double, 3>> object_centers;
    std::vector<std::vector<float>> object_signatures;  // unit norm, length D_v
    std::vector<std::vector<float>> spatial_signatures; // unit norm, length D_s
    std::vector<std::uint32_t> first_visible_frame;     // all distinct
    std::vector<std::vector<double>> pairwise_center_distances; // K x K
};

// Deterministic unit-norm feature vector for one object. Regenerates with a
// bumped attempt counter until |cosine| < 0.9 against every lower id, so
// distinct ids stay separable; the accepted vector for id k therefore depends
// only on (k, dim, seed).
std::vector<float> object_signature(std::uint32_t object_id, std::uint32_t dim,
                                    std::uint64_t seed);
std::vector<std::vector<float>> object_signatures(std::uint32_t count,
                                                  std::uint32_t dim,
                                                  std::uint64_t seed);

// FNV-1a over the signature bytes in id order; written to the ground-truth
// sidecar so a query run can prove it regenerated the same signatures.
std::uint64_t signature_digest(const std::vector<std::vector<float>>& sigs);

// Builds the bundle and its ground truth. Same spec, bit-identical output.
// Throws GenerationError when placement or signature separation cannot be
// satisfied within 1000 attempts.
std::pair<FrameBundle, GroundTruth> generate_scene(const SceneSpec& spec);

} // namespace cogmap
