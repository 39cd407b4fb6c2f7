#pragma once

#include <cstdint>
#include <vector>

#include "cogmap/cognitive_map.hpp"

namespace cogmap {

// Ground-truth-checkable lookups against a built map. Signatures arrive
// out-of-band (the map stores no labels); every cell is assigned to the
// signature with the highest cosine against the visual slice of its feature,
// ties and zero-norm slices resolving to the lowest id.
struct ObjectAssignment {
    std::vector<std::uint32_t> cell_object;     // per cell, assigned id
    std::vector<std::uint64_t> cells_per_object; // per id, assigned count
};

ObjectAssignment assign_cells(const CognitiveMap& map,
                              const std::vector<std::vector<float>>& signatures);

struct AppearanceOrder {
    std::vector<std::uint32_t> order;      // placed ids, earliest first
    std::vector<std::uint32_t> unplaced;   // ids with zero assigned cells
    std::vector<std::uint32_t> first_seen; // per id, min cell timestamp (placed only)
};

// Orders objects by the minimum timestamp over their assigned cells,
// ascending, ties broken by id. Objects without cells are reported, not
// ordered.
AppearanceOrder query_appearance_order(const CognitiveMap& map,
                                       const std::vector<std::vector<float>>& signatures);

// Euclidean distance between the occupancy-weighted cell centroids of two
// objects. Throws ContractError when either object has no assigned cell.
double query_object_distance(const CognitiveMap& map,
                             const std::vector<std::vector<float>>& signatures,
                             std::uint32_t a, std::uint32_t b);

// Assigned cell count per object.
std::vector<std::uint64_t> query_voxel_counts(const CognitiveMap& map,
                                              const std::vector<std::vector<float>>& signatures);

} // namespace cogmap
