#include "cogmap/queries.hpp"

#include <algorithm>
#include <cmath>

namespace cogmap {

ObjectAssignment assign_cells(const CognitiveMap& map,
                              const std::vector<std::vector<float>>& signatures) {
    if (signatures.empty())
        throw ContractError("assign: need at least one signature");
    const std::size_t dim = signatures[0].size();
    for (const auto& s : signatures)
        if (s.size() != dim)
            throw ContractError("assign: signatures differ in length");
    if (dim > map.feature_dim)
        throw ContractError("assign: signature longer than cell feature");

    ObjectAssignment out;
    out.cell_object.resize(map.cells.size());
    out.cells_per_object.assign(signatures.size(), 0);
    for (std::size_t j = 0; j < map.cells.size(); ++j) {
        const VoxelCell& cell = map.cells[j];
        double slice_sq = 0.0;
        for (std::size_t i = 0; i < dim; ++i) {
            const double x = static_cast<double>(cell.feature[i]);
            slice_sq += x * x;
        }
        const double slice_norm = std::sqrt(slice_sq);
        std::uint32_t best = 0;
        double best_cos = -2.0;
        for (std::uint32_t k = 0; k < signatures.size(); ++k) {
            double dot = 0.0, sig_sq = 0.0;
            for (std::size_t i = 0; i < dim; ++i) {
                const double s = static_cast<double>(signatures[k][i]);
                dot += static_cast<double>(cell.feature[i]) * s;
                sig_sq += s * s;
            }
            const double sig_norm = std::sqrt(sig_sq);
            const double cosine = (slice_norm > 0.0 && sig_norm > 0.0)
                                      ? dot / (slice_norm * sig_norm)
                                      : 0.0;
            if (cosine > best_cos) {
                best_cos = cosine;
                best = k;
            }
        }
        out.cell_object[j] = best;
        ++out.cells_per_object[best];
    }
    return out;
}

AppearanceOrder query_appearance_order(const CognitiveMap& map,
                                       const std::vector<std::vector<float>>& signatures) {
    if (map.cells.empty())
        throw ContractError("appearance order: empty map");
    if (signatures.size() < 2)
        throw ContractError("appearance order: need at least 2 signatures");
    const ObjectAssignment assign = assign_cells(map, signatures);

    AppearanceOrder out;
    out.first_seen.assign(signatures.size(), 0);
    std::vector<bool> placed(signatures.size(), false);
    for (std::size_t j = 0; j < map.cells.size(); ++j) {
        const std::uint32_t k = assign.cell_object[j];
        const std::uint32_t t = map.cells[j].timestamp;
        if (!placed[k] || t < out.first_seen[k]) {
            out.first_seen[k] = t;
            placed[k] = true;
        }
    }
    for (std::uint32_t k = 0; k < signatures.size(); ++k) {
        if (placed[k])
            out.order.push_back(k);
        else
            out.unplaced.push_back(k);
    }
    std::sort(out.order.begin(), out.order.end(),
              [&](std::uint32_t a, std::uint32_t b) {
                  if (out.first_seen[a] != out.first_seen[b])
                      return out.first_seen[a] < out.first_seen[b];
                  return a < b;
              });
    return out;
}

namespace {

std::array<double, 3> weighted_centroid(const CognitiveMap& map,
                                        const ObjectAssignment& assign,
                                        std::uint32_t object) {
    double sx = 0.0, sy = 0.0, sz = 0.0, w = 0.0;
    for (std::size_t j = 0; j < map.cells.size(); ++j) {
        if (assign.cell_object[j] != object)
            continue;
        const double m = static_cast<double>(map.cells[j].occupancy);
        sx += m * map.cells[j].coordinate[0];
        sy += m * map.cells[j].coordinate[1];
        sz += m * map.cells[j].coordinate[2];
        w += m;
    }
    if (w == 0.0)
        throw ContractError("distance: object " + std::to_string(object) +
                            " has no assigned cells");
    return {sx / w, sy / w, sz / w};
}

} // namespace

double query_object_distance(const CognitiveMap& map,
                             const std::vector<std::vector<float>>& signatures,
                             std::uint32_t a, std::uint32_t b) {
    if (a >= signatures.size() || b >= signatures.size())
        throw ContractError("distance: object id out of range");
    const ObjectAssignment assign = assign_cells(map, signatures);
    const std::array<double, 3> ca = weighted_centroid(map, assign, a);
    const std::array<double, 3> cb = weighted_centroid(map, assign, b);
    const double dx = ca[0] - cb[0];
    const double dy = ca[1] - cb[1];
    const double dz = ca[2] - cb[2];
    return std::sqrt(dx * dx + dy * dy + dz * dz);
}

std::vector<std::uint64_t> query_voxel_counts(const CognitiveMap& map,
                                              const std::vector<std::vector<float>>& signatures) {
    return assign_cells(map, signatures).cells_per_object;
}

} // namespace cogmap
