#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cogmap/cognitive_map.hpp"
#include "cogmap/frame_bundle.hpp"

namespace cogmap {

struct SuiteResult {
    std::string name;
    bool passed = false;
    std::string detail;
};

// Reference pipeline written independently of build_map: stores every
// intermediate, groups through an ordered container instead of sorting, and
// re-derives every mean with plain loops. Shares only the sampling stage,
// which has its own determinism suite.
CognitiveMap naive_build_map(const FrameBundle& bundle, const MapConfig& config);

// Random bundle for oracle comparisons: uniform coordinates in
// [-coord_range, coord_range], uniform confidences, unit-scale Gaussian
// features, one frame per timestamp.
FrameBundle random_test_bundle(std::uint64_t seed, std::uint32_t frames,
                               std::uint32_t patches_per_frame,
                               std::uint32_t dim_visual,
                               std::uint32_t dim_spatial, double coord_range);

// Bit-level equality of every cell field; `maps` additionally compares the
// center and feature width.
bool cells_bitwise_equal(const CognitiveMap& a, const CognitiveMap& b);
bool maps_bitwise_equal(const CognitiveMap& a, const CognitiveMap& b);

SuiteResult run_quantize_exhaustive();
SuiteResult run_aggregate_oracle();
SuiteResult run_rope_identity();
SuiteResult run_grad_check();
SuiteResult run_scene_queries();

const std::vector<std::string>& suite_names();
SuiteResult run_suite(const std::string& name); // throws UsageError if unknown

} // namespace cogmap
