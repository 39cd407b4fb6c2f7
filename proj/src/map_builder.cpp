#include "cogmap/map_builder.hpp"

#include <algorithm>
#include <cmath>

#include "cogmap/rng.hpp"

namespace cogmap {

namespace {

// Stream tag for down-sampling; keeps the subset independent of any other
// consumer of the same master seed.
constexpr std::uint64_t kSampleStreamTag = 0x70'6D'61'73ULL; // "samp"

} // namespace

std::array<double, 3> compute_scene_center(const std::vector<PatchToken>& tokens,
                                           double conf_threshold) {
    double sx = 0.0, sy = 0.0, sz = 0.0;
    std::uint64_t n = 0;
    for (const PatchToken& t : tokens) {
        if (static_cast<double>(t.confidence) > conf_threshold) {
            sx += static_cast<double>(t.coordinate[0]);
            sy += static_cast<double>(t.coordinate[1]);
            sz += static_cast<double>(t.coordinate[2]);
            ++n;
        }
    }
    if (n == 0)
        throw NoConfidentGeometryError("no token above the confidence threshold");
    const double nd = static_cast<double>(n);
    return {sx / nd, sy / nd, sz / nd};
}

QuantizeResult quantize(const std::array<double, 3>& coordinate,
                        const std::array<double, 3>& center, double resolution,
                        std::uint32_t grid_extent) {
    QuantizeResult out;
    const std::int64_t half = grid_extent / 2;
    out.in_bounds = true;
    for (int a = 0; a < 3; ++a) {
        const double rel = coordinate[a] - center[a];
        const std::int64_t u =
            static_cast<std::int64_t>(std::floor(rel / resolution)) + half;
        out.index[a] = u;
        if (u < 0 || u >= static_cast<std::int64_t>(grid_extent))
            out.in_bounds = false;
    }
    return out;
}

std::uint64_t hash_voxel(const std::array<std::uint32_t, 3>& u,
                         std::uint32_t grid_extent) {
    for (std::uint32_t c : u)
        if (c >= grid_extent)
            throw ContractError("hash: voxel index out of range");
    const std::uint64_t d = grid_extent;
    return static_cast<std::uint64_t>(u[0]) * d * d +
           static_cast<std::uint64_t>(u[1]) * d + u[2];
}

VoxelCell aggregate_bin(std::span<const BinToken> bin, double sim_threshold,
                        const std::array<std::uint32_t, 3>& voxel_index,
                        std::uint32_t grid_extent) {
    if (bin.empty())
        throw ContractError("aggregate: empty bin");
    const std::size_t dim = bin[0].feature.size();
    for (const BinToken& t : bin)
        if (t.feature.size() != dim)
            throw ContractError("aggregate: feature width mismatch in bin");

    // Full-bin centroid.
    std::vector<double> centroid(dim, 0.0);
    for (const BinToken& t : bin)
        for (std::size_t k = 0; k < dim; ++k)
            centroid[k] += static_cast<double>(t.feature[k]);
    const double n_d = static_cast<double>(bin.size());
    double centroid_sq = 0.0;
    for (std::size_t k = 0; k < dim; ++k) {
        centroid[k] /= n_d;
        centroid_sq += centroid[k] * centroid[k];
    }
    const double centroid_norm = std::sqrt(centroid_sq);

    // Outlier filter; degenerate cases keep the whole bin.
    std::vector<std::size_t> refined;
    if (centroid_norm > 0.0) {
        for (std::size_t i = 0; i < bin.size(); ++i) {
            double dot = 0.0, sq = 0.0;
            for (std::size_t k = 0; k < dim; ++k) {
                const double x = static_cast<double>(bin[i].feature[k]);
                dot += x * centroid[k];
                sq += x * x;
            }
            const double norm = std::sqrt(sq);
            const double cosine = norm > 0.0 ? dot / (norm * centroid_norm) : 0.0;
            if (cosine > sim_threshold)
                refined.push_back(i);
        }
    }
    if (refined.empty()) {
        refined.resize(bin.size());
        for (std::size_t i = 0; i < bin.size(); ++i)
            refined[i] = i;
    }

    VoxelCell cell;
    std::vector<double> feat(dim, 0.0);
    double cx = 0.0, cy = 0.0, cz = 0.0;
    std::uint32_t t_min = bin[refined[0]].timestamp;
    for (std::size_t i : refined) {
        const BinToken& t = bin[i];
        for (std::size_t k = 0; k < dim; ++k)
            feat[k] += static_cast<double>(t.feature[k]);
        cx += t.coordinate[0];
        cy += t.coordinate[1];
        cz += t.coordinate[2];
        t_min = std::min(t_min, t.timestamp);
    }
    const double m_d = static_cast<double>(refined.size());
    cell.feature.resize(dim);
    for (std::size_t k = 0; k < dim; ++k)
        cell.feature[k] = static_cast<float>(feat[k] / m_d);
    cell.coordinate = {cx / m_d, cy / m_d, cz / m_d};
    cell.timestamp = t_min;
    cell.occupancy = static_cast<std::uint32_t>(refined.size());
    cell.voxel_index = voxel_index;
    cell.hash = hash_voxel(voxel_index, grid_extent);
    return cell;
}

std::vector<VoxelCell> sample_map(std::vector<VoxelCell> cells,
                                  std::uint32_t max_voxels, std::uint64_t seed) {
    if (cells.size() <= max_voxels)
        return cells;
    const std::size_t n = cells.size();
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i)
        idx[i] = i;
    Rng rng(derive_stream(seed, kSampleStreamTag));
    // Partial Fisher-Yates: the first max_voxels slots end up holding a
    // uniform subset.
    for (std::size_t i = 0; i < max_voxels; ++i) {
        const std::size_t j = i + rng.bounded(n - i);
        std::swap(idx[i], idx[j]);
    }
    idx.resize(max_voxels);
    std::sort(idx.begin(), idx.end()); // input is hash-sorted, so this is too
    std::vector<VoxelCell> out;
    out.reserve(max_voxels);
    for (std::size_t i : idx)
        out.push_back(std::move(cells[i]));
    return out;
}

CognitiveMap build_map(const FrameBundle& bundle, const MapConfig& config,
                       BuildStats* stats) {
    config.validate();
    bundle.validate();

    BuildStats local;
    local.tokens_in = bundle.tokens.size();

    const std::array<double, 3> center =
        compute_scene_center(bundle.tokens, config.conf_threshold);

    struct Keyed {
        std::uint64_t hash;
        BinToken token;
    };
    std::vector<Keyed> keyed;
    keyed.reserve(bundle.tokens.size());
    for (const PatchToken& t : bundle.tokens) {
        const bool confident =
            static_cast<double>(t.confidence) > config.conf_threshold;
        if (!confident && !config.insert_low_confidence) {
            ++local.dropped_low_confidence;
            continue;
        }
        const std::array<double, 3> coord = {
            static_cast<double>(t.coordinate[0]),
            static_cast<double>(t.coordinate[1]),
            static_cast<double>(t.coordinate[2]),
        };
        const QuantizeResult q = quantize(coord, center, config.resolution,
                                          config.grid_extent);
        if (!q.in_bounds) {
            ++local.dropped_out_of_bounds;
            continue;
        }
        const std::array<std::uint32_t, 3> u = {
            static_cast<std::uint32_t>(q.index[0]),
            static_cast<std::uint32_t>(q.index[1]),
            static_cast<std::uint32_t>(q.index[2]),
        };
        Keyed k;
        k.hash = hash_voxel(u, config.grid_extent);
        k.token.feature.reserve(bundle.dim_visual + bundle.dim_spatial);
        k.token.feature.insert(k.token.feature.end(), t.visual_feature.begin(),
                               t.visual_feature.end());
        k.token.feature.insert(k.token.feature.end(), t.spatial_feature.begin(),
                               t.spatial_feature.end());
        k.token.coordinate = {coord[0] - center[0], coord[1] - center[1],
                              coord[2] - center[2]};
        k.token.timestamp = t.timestamp;
        k.token.global_index = t.global_index;
        keyed.push_back(std::move(k));
    }

    // Tokens arrive in ascending global_index order; a stable sort on the
    // hash alone keeps that order inside each bin.
    std::stable_sort(keyed.begin(), keyed.end(),
                     [](const Keyed& a, const Keyed& b) { return a.hash < b.hash; });

    std::vector<VoxelCell> cells;
    std::vector<BinToken> bin;
    std::size_t i = 0;
    while (i < keyed.size()) {
        std::size_t j = i;
        bin.clear();
        while (j < keyed.size() && keyed[j].hash == keyed[i].hash) {
            bin.push_back(std::move(keyed[j].token));
            ++j;
        }
        const std::uint64_t h = keyed[i].hash;
        const std::uint64_t d = config.grid_extent;
        const std::array<std::uint32_t, 3> u = {
            static_cast<std::uint32_t>(h / (d * d)),
            static_cast<std::uint32_t>((h / d) % d),
            static_cast<std::uint32_t>(h % d),
        };
        cells.push_back(aggregate_bin(bin, config.sim_threshold, u,
                                      config.grid_extent));
        i = j;
    }
    local.bins = cells.size();

    cells = sample_map(std::move(cells), config.max_voxels, config.seed);
    local.sampled = cells.size();

    CognitiveMap map;
    map.center = center;
    map.config = config;
    map.feature_dim = bundle.dim_visual + bundle.dim_spatial;
    map.cells = std::move(cells);
    map.validate();
    if (stats)
        *stats = local;
    return map;
}

} // namespace cogmap
