#include "cogmap/frame_bundle.hpp"

#include <cmath>

#include "cogmap/io_util.hpp"

namespace cogmap {

void FrameBundle::validate() const {
    if (frame_timestamps.size() != frame_count)
        throw FormatError("CMF1: frame timestamp count mismatch");
    if (tokens.size() != token_count())
        throw FormatError("CMF1: token count mismatch");
    for (std::uint32_t f = 1; f < frame_count; ++f) {
        if (frame_timestamps[f] < frame_timestamps[f - 1])
            throw FormatError("CMF1: timestamps not nondecreasing");
    }
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        const PatchToken& t = tokens[i];
        if (t.global_index != i)
            throw FormatError("CMF1: global_index mismatch");
        if (t.visual_feature.size() != dim_visual ||
            t.spatial_feature.size() != dim_spatial)
            throw FormatError("CMF1: token feature length mismatch");
        const std::uint32_t frame =
            static_cast<std::uint32_t>(i / patches_per_frame);
        if (t.timestamp != frame_timestamps[frame])
            throw FormatError("CMF1: token timestamp differs from its frame");
        if (!(t.confidence >= 0.0f && t.confidence <= 1.0f))
            throw FormatError("CMF1: confidence outside [0, 1]");
        for (float c : t.coordinate)
            if (!std::isfinite(c))
                throw FormatError("CMF1: non-finite coordinate");
    }
}

std::pair<std::vector<std::array<double, 3>>, std::vector<double>>
pool_dense_to_patches(const DenseFrame& frame) {
    const std::size_t p = frame.patch_size;
    if (p == 0 || frame.height % p != 0 || frame.width % p != 0)
        throw FormatError("dense frame: patch size does not divide image");
    if (frame.point_map.size() != frame.height * frame.width * 3 ||
        frame.confidence_map.size() != frame.height * frame.width)
        throw FormatError("dense frame: map size mismatch");

    const std::size_t ph = frame.height / p;
    const std::size_t pw = frame.width / p;
    std::vector<std::array<double, 3>> coords(ph * pw);
    std::vector<double> confs(ph * pw);
    const double count = static_cast<double>(p * p);
    for (std::size_t by = 0; by < ph; ++by) {
        for (std::size_t bx = 0; bx < pw; ++bx) {
            double sx = 0.0, sy = 0.0, sz = 0.0, sc = 0.0;
            for (std::size_t dy = 0; dy < p; ++dy) {
                for (std::size_t dx = 0; dx < p; ++dx) {
                    const std::size_t pix = (by * p + dy) * frame.width + bx * p + dx;
                    sx += frame.point_map[pix * 3 + 0];
                    sy += frame.point_map[pix * 3 + 1];
                    sz += frame.point_map[pix * 3 + 2];
                    sc += frame.confidence_map[pix];
                }
            }
            coords[by * pw + bx] = {sx / count, sy / count, sz / count};
            confs[by * pw + bx] = sc / count;
        }
    }
    return {std::move(coords), std::move(confs)};
}

std::vector<std::uint8_t> encode_frame_bundle(const FrameBundle& bundle) {
    bundle.validate();
    ByteWriter w;
    w.magic("CMF1");
    w.u32(bundle.frame_count);
    w.u32(bundle.patches_per_frame);
    w.u32(bundle.dim_visual);
    w.u32(bundle.dim_spatial);
    std::size_t i = 0;
    for (std::uint32_t f = 0; f < bundle.frame_count; ++f) {
        w.u32(bundle.frame_timestamps[f]);
        for (std::uint32_t m = 0; m < bundle.patches_per_frame; ++m, ++i) {
            const PatchToken& t = bundle.tokens[i];
            for (float v : t.visual_feature)
                w.f32(v);
            for (float v : t.spatial_feature)
                w.f32(v);
            for (float v : t.coordinate)
                w.f32(v);
            w.f32(t.confidence);
        }
    }
    return w.bytes();
}

FrameBundle decode_frame_bundle(const std::vector<std::uint8_t>& bytes) {
    ByteReader r(bytes.data(), bytes.size());
    r.expect_magic("CMF1", "CMF1");
    FrameBundle b;
    b.frame_count = r.u32();
    b.patches_per_frame = r.u32();
    b.dim_visual = r.u32();
    b.dim_spatial = r.u32();

    // Header dims must describe a payload that fits in the file; guard the
    // size arithmetic itself so huge headers fail before any allocation.
    const std::uint64_t record_f32s = static_cast<std::uint64_t>(b.dim_visual) +
                                      b.dim_spatial + 4;
    const std::uint64_t per_frame =
        4 + static_cast<std::uint64_t>(b.patches_per_frame) * record_f32s * 4;
    const std::uint64_t payload = static_cast<std::uint64_t>(b.frame_count) * per_frame;
    if (record_f32s > (1ULL << 24) || per_frame > (1ULL << 40) ||
        payload > (1ULL << 40))
        throw FormatError("CMF1: dimension overflow");
    if (payload != r.remaining()) {
        if (payload > r.remaining())
            throw FormatError("CMF1: truncated payload");
        throw FormatError("CMF1: trailing bytes");
    }

    b.frame_timestamps.resize(b.frame_count);
    b.tokens.resize(b.token_count());
    std::size_t i = 0;
    for (std::uint32_t f = 0; f < b.frame_count; ++f) {
        b.frame_timestamps[f] = r.u32();
        for (std::uint32_t m = 0; m < b.patches_per_frame; ++m, ++i) {
            PatchToken& t = b.tokens[i];
            t.visual_feature.resize(b.dim_visual);
            for (float& v : t.visual_feature)
                v = r.f32();
            t.spatial_feature.resize(b.dim_spatial);
            for (float& v : t.spatial_feature)
                v = r.f32();
            for (float& v : t.coordinate)
                v = r.f32();
            t.confidence = r.f32();
            t.timestamp = b.frame_timestamps[f];
            t.global_index = i;
        }
    }
    b.validate();
    return b;
}

void write_frame_bundle(const FrameBundle& bundle,
                        const std::filesystem::path& path) {
    write_file_bytes(path, encode_frame_bundle(bundle));
}

FrameBundle read_frame_bundle(const std::filesystem::path& path) {
    return decode_frame_bundle(read_file_bytes(path));
}

} // namespace cogmap
