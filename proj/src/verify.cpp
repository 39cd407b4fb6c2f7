#include "cogmap/verify.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <map>
#include <optional>
#include <set>
#include <vector>

#include "cogmap/cdif.hpp"
#include "cogmap/map_builder.hpp"
#include "cogmap/queries.hpp"
#include "cogmap/rng.hpp"
#include "cogmap/scene.hpp"

namespace cogmap {

namespace {

constexpr std::uint64_t kBundleStreamTag = 0x6C'64'6E'62ULL; // "bndl"
constexpr std::uint64_t kOracleStreamTag = 0x6C'63'72'6FULL; // "orcl"
constexpr std::uint64_t kRopeStreamTag = 0x65'70'6F'72ULL;   // "rope"
constexpr std::uint64_t kGradStreamTag = 0x64'61'72'67ULL;   // "grad"

bool bits_equal(float a, float b) {
    return std::bit_cast<std::uint32_t>(a) == std::bit_cast<std::uint32_t>(b);
}

bool bits_equal(double a, double b) {
    return std::bit_cast<std::uint64_t>(a) == std::bit_cast<std::uint64_t>(b);
}

std::string format_detail(const char* fmt, ...) {
    char buf[256];
    va_list args;
    va_start(args, fmt);
    std::vsnprintf(buf, sizeof buf, fmt, args);
    va_end(args);
    return buf;
}

} // namespace

CognitiveMap naive_build_map(const FrameBundle& bundle, const MapConfig& config) {
    config.validate();
    bundle.validate();
    const std::uint32_t d = config.grid_extent;
    const std::int64_t half = d / 2;

    double sx = 0.0, sy = 0.0, sz = 0.0;
    std::uint64_t confident = 0;
    for (const PatchToken& t : bundle.tokens) {
        if (static_cast<double>(t.confidence) > config.conf_threshold) {
            sx += t.coordinate[0];
            sy += t.coordinate[1];
            sz += t.coordinate[2];
            ++confident;
        }
    }
    if (confident == 0)
        throw NoConfidentGeometryError("no token above the confidence threshold");
    const std::array<double, 3> center = {sx / static_cast<double>(confident),
                                          sy / static_cast<double>(confident),
                                          sz / static_cast<double>(confident)};

    // Ordered container instead of sort-and-scan; values keep token order.
    std::map<std::uint64_t, std::vector<std::size_t>> bins;
    for (std::size_t i = 0; i < bundle.tokens.size(); ++i) {
        const PatchToken& t = bundle.tokens[i];
        if (static_cast<double>(t.confidence) <= config.conf_threshold &&
            !config.insert_low_confidence)
            continue;
        std::array<std::int64_t, 3> u{};
        bool inside = true;
        for (int a = 0; a < 3; ++a) {
            const double rel =
                static_cast<double>(t.coordinate[a]) - center[a];
            u[a] = static_cast<std::int64_t>(std::floor(rel / config.resolution)) +
                   half;
            if (u[a] < 0 || u[a] >= static_cast<std::int64_t>(d))
                inside = false;
        }
        if (!inside)
            continue;
        const std::uint64_t h =
            static_cast<std::uint64_t>(u[0]) * d * d +
            static_cast<std::uint64_t>(u[1]) * d + static_cast<std::uint64_t>(u[2]);
        bins[h].push_back(i);
    }

    std::vector<VoxelCell> cells;
    for (const auto& [h, members] : bins) {
        const std::size_t dim = bundle.dim_visual + bundle.dim_spatial;
        std::vector<std::vector<double>> feats;
        std::vector<std::array<double, 3>> coords;
        std::vector<std::uint32_t> stamps;
        for (std::size_t i : members) {
            const PatchToken& t = bundle.tokens[i];
            std::vector<double> f;
            f.reserve(dim);
            for (float x : t.visual_feature)
                f.push_back(static_cast<double>(x));
            for (float x : t.spatial_feature)
                f.push_back(static_cast<double>(x));
            feats.push_back(std::move(f));
            coords.push_back({static_cast<double>(t.coordinate[0]) - center[0],
                              static_cast<double>(t.coordinate[1]) - center[1],
                              static_cast<double>(t.coordinate[2]) - center[2]});
            stamps.push_back(t.timestamp);
        }

        std::vector<double> centroid(dim, 0.0);
        for (const auto& f : feats)
            for (std::size_t k = 0; k < dim; ++k)
                centroid[k] += f[k];
        double centroid_sq = 0.0;
        for (std::size_t k = 0; k < dim; ++k) {
            centroid[k] /= static_cast<double>(feats.size());
            centroid_sq += centroid[k] * centroid[k];
        }
        const double centroid_norm = std::sqrt(centroid_sq);

        std::vector<std::size_t> keep;
        if (centroid_norm > 0.0) {
            for (std::size_t i = 0; i < feats.size(); ++i) {
                double dot = 0.0, sq = 0.0;
                for (std::size_t k = 0; k < dim; ++k) {
                    dot += feats[i][k] * centroid[k];
                    sq += feats[i][k] * feats[i][k];
                }
                const double norm = std::sqrt(sq);
                const double cosine =
                    norm > 0.0 ? dot / (norm * centroid_norm) : 0.0;
                if (cosine > config.sim_threshold)
                    keep.push_back(i);
            }
        }
        if (keep.empty())
            for (std::size_t i = 0; i < feats.size(); ++i)
                keep.push_back(i);

        VoxelCell cell;
        std::vector<double> mean(dim, 0.0);
        std::array<double, 3> cmean = {0.0, 0.0, 0.0};
        std::uint32_t t_min = stamps[keep[0]];
        for (std::size_t i : keep) {
            for (std::size_t k = 0; k < dim; ++k)
                mean[k] += feats[i][k];
            cmean[0] += coords[i][0];
            cmean[1] += coords[i][1];
            cmean[2] += coords[i][2];
            t_min = std::min(t_min, stamps[i]);
        }
        const double m = static_cast<double>(keep.size());
        cell.feature.resize(dim);
        for (std::size_t k = 0; k < dim; ++k)
            cell.feature[k] = static_cast<float>(mean[k] / m);
        cell.coordinate = {cmean[0] / m, cmean[1] / m, cmean[2] / m};
        cell.timestamp = t_min;
        cell.occupancy = static_cast<std::uint32_t>(keep.size());
        cell.voxel_index = {static_cast<std::uint32_t>(h / (std::uint64_t(d) * d)),
                            static_cast<std::uint32_t>((h / d) % d),
                            static_cast<std::uint32_t>(h % d)};
        cell.hash = h;
        cells.push_back(std::move(cell));
    }

    cells = sample_map(std::move(cells), config.max_voxels, config.seed);

    CognitiveMap map;
    map.center = center;
    map.config = config;
    map.feature_dim = bundle.dim_visual + bundle.dim_spatial;
    map.cells = std::move(cells);
    map.validate();
    return map;
}

FrameBundle random_test_bundle(std::uint64_t seed, std::uint32_t frames,
                               std::uint32_t patches_per_frame,
                               std::uint32_t dim_visual,
                               std::uint32_t dim_spatial, double coord_range) {
    Rng rng(derive_stream(seed, kBundleStreamTag));
    FrameBundle b;
    b.frame_count = frames;
    b.patches_per_frame = patches_per_frame;
    b.dim_visual = dim_visual;
    b.dim_spatial = dim_spatial;
    b.frame_timestamps.resize(frames);
    for (std::uint32_t f = 0; f < frames; ++f)
        b.frame_timestamps[f] = f;
    std::uint64_t index = 0;
    for (std::uint32_t f = 0; f < frames; ++f) {
        for (std::uint32_t p = 0; p < patches_per_frame; ++p) {
            PatchToken t;
            t.visual_feature.resize(dim_visual);
            for (float& x : t.visual_feature)
                x = static_cast<float>(rng.normal());
            t.spatial_feature.resize(dim_spatial);
            for (float& x : t.spatial_feature)
                x = static_cast<float>(rng.normal());
            for (int a = 0; a < 3; ++a)
                t.coordinate[a] =
                    static_cast<float>(rng.uniform(-coord_range, coord_range));
            t.confidence = static_cast<float>(rng.uniform01());
            t.timestamp = b.frame_timestamps[f];
            t.global_index = index++;
            b.tokens.push_back(std::move(t));
        }
    }
    b.validate();
    return b;
}

bool cells_bitwise_equal(const CognitiveMap& a, const CognitiveMap& b) {
    if (a.cells.size() != b.cells.size())
        return false;
    for (std::size_t i = 0; i < a.cells.size(); ++i) {
        const VoxelCell& x = a.cells[i];
        const VoxelCell& y = b.cells[i];
        if (x.feature.size() != y.feature.size())
            return false;
        for (std::size_t k = 0; k < x.feature.size(); ++k)
            if (!bits_equal(x.feature[k], y.feature[k]))
                return false;
        for (int c = 0; c < 3; ++c)
            if (!bits_equal(x.coordinate[c], y.coordinate[c]))
                return false;
        if (x.timestamp != y.timestamp || x.occupancy != y.occupancy ||
            x.voxel_index != y.voxel_index || x.hash != y.hash)
            return false;
    }
    return true;
}

bool maps_bitwise_equal(const CognitiveMap& a, const CognitiveMap& b) {
    for (int c = 0; c < 3; ++c)
        if (!bits_equal(a.center[c], b.center[c]))
            return false;
    if (a.feature_dim != b.feature_dim)
        return false;
    return cells_bitwise_equal(a, b);
}

SuiteResult run_quantize_exhaustive() {
    SuiteResult res{"quantize", false, {}};

    // Injectivity over the whole D=8 grid, plus the closed form.
    std::set<std::uint64_t> seen;
    for (std::uint32_t x = 0; x < 8; ++x)
        for (std::uint32_t y = 0; y < 8; ++y)
            for (std::uint32_t z = 0; z < 8; ++z) {
                const std::uint64_t h = hash_voxel({x, y, z}, 8);
                if (h != std::uint64_t(x) * 64 + y * 8 + z) {
                    res.detail = format_detail("hash(%u,%u,%u) = %llu", x, y, z,
                                               static_cast<unsigned long long>(h));
                    return res;
                }
                seen.insert(h);
            }
    if (seen.size() != 512) {
        res.detail = format_detail("collision: %zu distinct hashes of 512",
                                   seen.size());
        return res;
    }

    // Floor semantics with an exactly representable resolution: a coordinate
    // on a voxel edge lands in the upper voxel.
    struct Case {
        std::array<double, 3> p;
        std::array<std::int64_t, 3> want;
        bool in_bounds;
    };
    const std::array<double, 3> origin = {0.0, 0.0, 0.0};
    const Case cases[] = {
        {{0.0, 0.0, 0.0}, {4, 4, 4}, true},
        {{0.25, -0.25, 0.2499}, {5, 3, 4}, true},
        {{-1.0, 0.999, -0.0001}, {0, 7, 3}, true},
        {{1.0, 0.0, 0.0}, {8, 4, 4}, false},
        {{0.0, -1.0001, 0.0}, {4, -1, 4}, false},
    };
    for (const Case& c : cases) {
        const QuantizeResult q = quantize(c.p, origin, 0.25, 8);
        if (q.index != c.want || q.in_bounds != c.in_bounds) {
            res.detail = format_detail(
                "quantize(%g,%g,%g) -> (%lld,%lld,%lld) bounds=%d", c.p[0],
                c.p[1], c.p[2], static_cast<long long>(q.index[0]),
                static_cast<long long>(q.index[1]),
                static_cast<long long>(q.index[2]), int(q.in_bounds));
            return res;
        }
    }

    // Worked reference point on the default grid.
    const QuantizeResult q =
        quantize({0.25, -0.05, 0.1}, origin, 0.1, 100);
    const std::array<std::int64_t, 3> want = {52, 49, 51};
    if (!q.in_bounds || q.index != want) {
        res.detail = format_detail("reference point -> (%lld,%lld,%lld)",
                                   static_cast<long long>(q.index[0]),
                                   static_cast<long long>(q.index[1]),
                                   static_cast<long long>(q.index[2]));
        return res;
    }
    const std::uint64_t h = hash_voxel({52, 49, 51}, 100);
    if (h != 524951) {
        res.detail = format_detail("reference hash %llu",
                                   static_cast<unsigned long long>(h));
        return res;
    }

    res.passed = true;
    res.detail = "512 hashes injective, boundary cases exact";
    return res;
}

SuiteResult run_aggregate_oracle() {
    SuiteResult res{"aggregate", false, {}};
    const std::uint32_t kCases = 200;
    std::uint32_t degenerate = 0;
    for (std::uint32_t i = 0; i < kCases; ++i) {
        Rng rng(derive_stream(1234, kOracleStreamTag, i));
        const std::uint32_t frames = 1 + static_cast<std::uint32_t>(rng.bounded(5));
        const std::uint32_t patches =
            1 + static_cast<std::uint32_t>(rng.bounded(500 / frames));
        const std::uint32_t dv = 1 + static_cast<std::uint32_t>(rng.bounded(16));
        const std::uint32_t ds = 1 + static_cast<std::uint32_t>(rng.bounded(16));

        MapConfig cfg;
        cfg.grid_extent = 2 * (2 + static_cast<std::uint32_t>(rng.bounded(5)));
        cfg.resolution = rng.uniform(0.05, 0.5);
        // Every 20th case pushes the threshold above any drawn confidence so
        // both pipelines must agree on the no-geometry failure as well.
        cfg.conf_threshold = i % 20 == 19 ? 0.999 : rng.uniform(0.0, 0.7);
        cfg.sim_threshold = rng.uniform(-0.2, 0.9);
        cfg.max_voxels = rng.bounded(4) == 0
                             ? 1 + static_cast<std::uint32_t>(rng.bounded(20))
                             : 5000;
        cfg.seed = i;
        cfg.insert_low_confidence = rng.bounded(8) == 0;

        const FrameBundle bundle = random_test_bundle(
            derive_stream(99, kOracleStreamTag, i), frames, patches, dv, ds, 2.0);

        auto guarded = [&](auto&& build) -> std::optional<CognitiveMap> {
            try {
                return build();
            } catch (const NoConfidentGeometryError&) {
                return std::nullopt;
            }
        };
        const auto fast = guarded([&] { return build_map(bundle, cfg); });
        const auto naive = guarded([&] { return naive_build_map(bundle, cfg); });
        if (fast.has_value() != naive.has_value()) {
            res.detail = format_detail("case %u: degenerate-center disagreement", i);
            return res;
        }
        if (!fast.has_value()) {
            ++degenerate;
            continue;
        }
        if (!maps_bitwise_equal(*fast, *naive)) {
            res.detail = format_detail("case %u: maps differ", i);
            return res;
        }
    }
    res.passed = true;
    res.detail = format_detail("%u bundles bit-identical (%u with no confident token)",
                               kCases, degenerate);
    return res;
}

SuiteResult run_rope_identity() {
    SuiteResult res{"rope", false, {}};
    const std::uint32_t kDraws = 1000;
    double worst = 0.0;
    Rng rng(derive_stream(7, kRopeStreamTag));
    for (std::uint32_t i = 0; i < kDraws; ++i) {
        const std::uint32_t head_dim =
            2 * (1 + static_cast<std::uint32_t>(rng.bounded(8)));
        const std::uint32_t blocks = 1 + static_cast<std::uint32_t>(rng.bounded(2));
        const std::uint32_t cols = head_dim * blocks;
        const double base = rng.uniform(50.0, 10000.0);
        const double scale = rng.uniform(0.25, 4.0);
        const Rope3dConfig cfg = Rope3dConfig::even_split(head_dim, base, scale);

        MatrixD x(1, cols), y(1, cols);
        for (double& v : x.data)
            v = rng.normal();
        for (double& v : y.data)
            v = rng.normal();
        std::array<double, 3> pa{}, pb{};
        for (int a = 0; a < 3; ++a) {
            pa[a] = rng.uniform(-4.0, 4.0);
            pb[a] = rng.uniform(-4.0, 4.0);
        }

        const MatrixD xr = rope3d_apply(x, {pa}, cfg);
        const MatrixD yr = rope3d_apply(y, {pb}, cfg);
        const std::array<double, 3> diff = {pa[0] - pb[0], pa[1] - pb[1],
                                            pa[2] - pb[2]};
        const MatrixD xd = rope3d_apply(x, {diff}, cfg);

        double lhs = 0.0, rhs = 0.0;
        for (std::uint32_t k = 0; k < cols; ++k) {
            lhs += xr.at(0, k) * yr.at(0, k);
            rhs += xd.at(0, k) * y.at(0, k);
        }
        const double err = std::abs(lhs - rhs) / std::max(1.0, std::abs(lhs));
        worst = std::max(worst, err);
    }
    res.passed = worst <= 1e-10;
    res.detail = format_detail("%u draws, worst relative error %.3e", kDraws, worst);
    return res;
}

namespace {

// Mirrors the registration order of cdif_tape_forward: per layer the two
// coordinate MLPs, the self stack, the cross stack, gate, ffn; each MLP as
// layer1 then layer2, each linear as weight then bias.
std::vector<std::vector<double>*> flat_param_buffers(CdifParamsD& p) {
    std::vector<std::vector<double>*> out;
    auto lin = [&out](LinearParamsD& l) {
        out.push_back(&l.weight.data);
        out.push_back(&l.bias);
    };
    auto mlp = [&lin](MlpParamsD& m) {
        lin(m.layer1);
        lin(m.layer2);
    };
    for (CdifLayerParamsD& l : p.layers) {
        mlp(l.map_coord_mlp);
        mlp(l.visual_coord_mlp);
        lin(l.self_q);
        lin(l.self_k);
        lin(l.self_v);
        lin(l.self_out);
        lin(l.cross_q);
        lin(l.cross_k);
        lin(l.cross_v);
        lin(l.cross_out);
        mlp(l.gate_mlp);
        mlp(l.ffn);
    }
    return out;
}

} // namespace

SuiteResult run_grad_check() {
    SuiteResult res{"grad", false, {}};
    const std::uint32_t dv = 8, ds = 4, cells = 5, tokens = 4, heads = 2,
                        layers = 1;
    CdifParamsD params =
        make_random_cdif_params<double>(dv, ds, layers, heads, 42);

    Rng rng(derive_stream(42, kGradStreamTag));
    MatrixD visual(tokens, dv), map_tokens(cells, dv + ds);
    for (double& v : visual.data)
        v = rng.normal();
    for (double& v : map_tokens.data)
        v = rng.normal();
    std::vector<std::array<double, 3>> vis_coords(tokens), map_coords(cells);
    for (auto& c : vis_coords)
        for (int a = 0; a < 3; ++a)
            c[a] = rng.uniform(-1.5, 1.5);
    for (auto& c : map_coords)
        for (int a = 0; a < 3; ++a)
            c[a] = rng.uniform(-1.5, 1.5);

    auto forward_loss = [&](const CdifParamsD& p) {
        FusionStateD st;
        st.visual = visual;
        st.visual_coords = vis_coords;
        st.map = map_tokens;
        st.map_coords = map_coords;
        const MatrixD& out = cdif_forward(st, p);
        double acc = 0.0;
        for (double v : out.data)
            acc += v * v;
        return acc;
    };

    ad::Tape tape;
    CdifTapeBindings bind;
    const ad::VarId out_id = cdif_tape_forward(tape, params, visual, vis_coords,
                                               map_tokens, map_coords, &bind);

    // The tape forward must reproduce the plain double forward exactly.
    {
        FusionStateD st;
        st.visual = visual;
        st.visual_coords = vis_coords;
        st.map = map_tokens;
        st.map_coords = map_coords;
        const MatrixD& plain = cdif_forward(st, params);
        const MatrixD& taped = tape.value(out_id);
        if (!plain.same_shape(taped)) {
            res.detail = "tape output shape mismatch";
            return res;
        }
        for (std::size_t k = 0; k < plain.data.size(); ++k)
            if (!bits_equal(plain.data[k], taped.data[k])) {
                res.detail = format_detail(
                    "tape forward differs from plain forward at element %zu", k);
                return res;
            }
    }

    tape.backward(tape.sum_squares(out_id));

    std::vector<std::vector<double>*> buffers = flat_param_buffers(params);
    if (buffers.size() != bind.params.size()) {
        res.detail = format_detail("parameter enumeration mismatch: %zu vs %zu",
                                   buffers.size(), bind.params.size());
        return res;
    }

    const double step = 1e-5;
    double worst = 0.0;
    std::string worst_name;
    std::size_t checked = 0;
    for (std::size_t t = 0; t < buffers.size(); ++t) {
        std::vector<double>& buf = *buffers[t];
        const MatrixD& grad = tape.grad(bind.params[t].second);
        if (grad.data.size() != buf.size()) {
            res.detail = format_detail("gradient shape mismatch for %s",
                                       bind.params[t].first.c_str());
            return res;
        }
        for (std::size_t j = 0; j < buf.size(); ++j) {
            const double orig = buf[j];
            buf[j] = orig + step;
            const double up = forward_loss(params);
            buf[j] = orig - step;
            const double down = forward_loss(params);
            buf[j] = orig;
            const double fd = (up - down) / (2.0 * step);
            const double ad_g = grad.data[j];
            const double rel = std::abs(ad_g - fd) /
                               std::max({1.0, std::abs(ad_g), std::abs(fd)});
            if (rel > worst) {
                worst = rel;
                worst_name = bind.params[t].first;
            }
            ++checked;
        }
    }

    res.passed = worst <= 1e-4;
    res.detail = format_detail("%zu parameters, worst relative error %.3e (%s)",
                               checked, worst, worst_name.c_str());
    return res;
}

SuiteResult run_scene_queries() {
    SuiteResult res{"scene-queries", false, {}};
    const std::uint32_t kScenes = 100;
    std::uint32_t order_ok = 0;
    double err_sum = 0.0;
    std::uint64_t pairs = 0;
    for (std::uint32_t s = 0; s < kScenes; ++s) {
        SceneSpec spec;
        spec.object_count = 4;
        spec.scene_extent = 0.8; // keeps every recentered surface point inside the grid
        spec.points_per_object_per_frame = 8;
        spec.feature_noise_sigma = 0.05;
        spec.coordinate_noise_sigma = 0.01;
        spec.frames = 12;
        spec.seed = 1000 + s;

        MapConfig cfg;
        cfg.seed = spec.seed;

        try {
            const auto [bundle, truth] = generate_scene(spec);
            const CognitiveMap map = build_map(bundle, cfg);

            std::vector<std::uint32_t> expected(spec.object_count);
            for (std::uint32_t k = 0; k < spec.object_count; ++k)
                expected[k] = k;
            std::sort(expected.begin(), expected.end(),
                      [&truth](std::uint32_t a, std::uint32_t b) {
                          return truth.first_visible_frame[a] <
                                 truth.first_visible_frame[b];
                      });

            const AppearanceOrder ao =
                query_appearance_order(map, truth.object_signatures);
            if (ao.unplaced.empty() && ao.order == expected)
                ++order_ok;

            std::vector<bool> placed(spec.object_count, true);
            for (std::uint32_t id : ao.unplaced)
                placed[id] = false;
            for (std::uint32_t a = 0; a < spec.object_count; ++a)
                for (std::uint32_t b = a + 1; b < spec.object_count; ++b) {
                    if (!placed[a] || !placed[b])
                        continue;
                    const double got =
                        query_object_distance(map, truth.object_signatures, a, b);
                    err_sum += std::abs(got - truth.pairwise_center_distances[a][b]);
                    ++pairs;
                }
        } catch (const ContractError&) {
            // Counts as an incorrect scene; nothing to add for distances.
        }
    }
    const double mae = pairs > 0 ? err_sum / static_cast<double>(pairs) : 1e9;
    res.passed = order_ok >= 95 && mae <= 0.08;
    res.detail = format_detail(
        "appearance order %u/%u, distance MAE %.4f (budget 0.0800)", order_ok,
        kScenes, mae);
    return res;
}

const std::vector<std::string>& suite_names() {
    static const std::vector<std::string> names = {
        "quantize", "aggregate", "rope", "grad", "scene-queries"};
    return names;
}

SuiteResult run_suite(const std::string& name) {
    if (name == "quantize")
        return run_quantize_exhaustive();
    if (name == "aggregate")
        return run_aggregate_oracle();
    if (name == "rope")
        return run_rope_identity();
    if (name == "grad")
        return run_grad_check();
    if (name == "scene-queries")
        return run_scene_queries();
    throw UsageError("unknown suite '" + name +
                     "' (expected quantize, aggregate, rope, grad, scene-queries)");
}

} // namespace cogmap
