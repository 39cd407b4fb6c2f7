#include "cogmap/cognitive_map.hpp"

#include <cmath>

#include "cogmap/io_util.hpp"

namespace cogmap {

void MapConfig::validate() const {
    if (grid_extent < 2 || grid_extent % 2 != 0)
        throw ConfigError("map config: grid extent must be even and >= 2");
    if (!(resolution > 0.0) || !std::isfinite(resolution))
        throw ConfigError("map config: resolution must be positive");
    if (!(conf_threshold >= 0.0 && conf_threshold <= 1.0))
        throw ConfigError("map config: conf threshold outside [0, 1]");
    if (!(sim_threshold >= -1.0 && sim_threshold <= 1.0))
        throw ConfigError("map config: sim threshold outside [-1, 1]");
    if (max_voxels < 1)
        throw ConfigError("map config: max voxels must be >= 1");
}

void CognitiveMap::validate() const {
    config.validate();
    const std::uint64_t d = config.grid_extent;
    if (cells.size() > config.max_voxels)
        throw ContractError("map: cell count exceeds max voxels");
    for (std::size_t j = 0; j < cells.size(); ++j) {
        const VoxelCell& c = cells[j];
        if (c.feature.size() != feature_dim)
            throw ContractError("map: cell feature width mismatch");
        if (c.occupancy < 1)
            throw ContractError("map: cell occupancy must be >= 1");
        for (std::uint32_t u : c.voxel_index)
            if (u >= d)
                throw ContractError("map: voxel index out of range");
        const std::uint64_t h = static_cast<std::uint64_t>(c.voxel_index[0]) * d * d +
                                static_cast<std::uint64_t>(c.voxel_index[1]) * d +
                                c.voxel_index[2];
        if (c.hash != h)
            throw ContractError("map: hash does not match voxel index");
        if (j > 0 && !(cells[j - 1].hash < c.hash))
            throw ContractError("map: hashes not strictly increasing");
        for (double v : c.coordinate)
            if (!std::isfinite(v))
                throw ContractError("map: non-finite cell coordinate");
    }
}

std::vector<std::uint8_t> encode_map(const CognitiveMap& map) {
    map.validate();
    ByteWriter w;
    w.magic("CMAP");
    w.u32(1);
    for (double v : map.center)
        w.f64(v);
    w.f64(map.config.resolution);
    w.u32(map.config.grid_extent);
    w.u32(static_cast<std::uint32_t>(map.cells.size()));
    w.u32(map.feature_dim);
    for (const VoxelCell& c : map.cells) {
        for (std::uint32_t u : c.voxel_index)
            w.u32(u);
        w.u64(c.hash);
        for (double v : c.coordinate)
            w.f64(v);
        w.u32(c.timestamp);
        w.u32(c.occupancy);
        for (float v : c.feature)
            w.f32(v);
    }
    return w.bytes();
}

CognitiveMap decode_map(const std::vector<std::uint8_t>& bytes) {
    ByteReader r(bytes.data(), bytes.size());
    r.expect_magic("CMAP", "CMAP");
    const std::uint32_t version = r.u32();
    if (version != 1)
        throw FormatError("CMAP: unsupported version");
    CognitiveMap m;
    for (double& v : m.center)
        v = r.f64();
    m.config.resolution = r.f64();
    m.config.grid_extent = r.u32();
    const std::uint32_t count = r.u32();
    m.feature_dim = r.u32();

    const std::uint64_t cell_bytes = 12 + 8 + 24 + 8 +
                                     static_cast<std::uint64_t>(m.feature_dim) * 4;
    const std::uint64_t payload = static_cast<std::uint64_t>(count) * cell_bytes;
    if (m.feature_dim > (1ULL << 24) || payload > (1ULL << 40))
        throw FormatError("CMAP: dimension overflow");
    if (payload != r.remaining()) {
        if (payload > r.remaining())
            throw FormatError("CMAP: truncated payload");
        throw FormatError("CMAP: trailing bytes");
    }

    // Cells can only exceed the default cap if the producing run raised it;
    // accept the file by widening the echoed cap.
    if (count > m.config.max_voxels)
        m.config.max_voxels = count;

    m.cells.resize(count);
    for (VoxelCell& c : m.cells) {
        for (std::uint32_t& u : c.voxel_index)
            u = r.u32();
        c.hash = r.u64();
        for (double& v : c.coordinate)
            v = r.f64();
        c.timestamp = r.u32();
        c.occupancy = r.u32();
        c.feature.resize(m.feature_dim);
        for (float& v : c.feature)
            v = r.f32();
    }
    try {
        m.validate();
    } catch (const ContractError& e) {
        throw FormatError(std::string("CMAP: invalid content: ") + e.what());
    }
    return m;
}

void write_map(const CognitiveMap& map, const std::filesystem::path& path) {
    write_file_bytes(path, encode_map(map));
}

CognitiveMap read_map(const std::filesystem::path& path) {
    return decode_map(read_file_bytes(path));
}

} // namespace cogmap
