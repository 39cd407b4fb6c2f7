// Command line front end: synthesize scenes, build maps, run the fusion
// stack, query built maps against ground truth, run verification suites.
// Exit codes: 0 ok, 2 usage, 3 file format, 4 contract violation, 5 failed
// verification.

#include <algorithm>
#include <array>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "cogmap/cdif.hpp"
#include "cogmap/config.hpp"
#include "cogmap/error.hpp"
#include "cogmap/io_util.hpp"
#include "cogmap/map_builder.hpp"
#include "cogmap/queries.hpp"
#include "cogmap/scene.hpp"
#include "cogmap/verify.hpp"

namespace {

using namespace cogmap;

struct TruthSidecar {
    std::uint32_t objects = 0;
    std::uint32_t dim_visual = 0;
    std::uint32_t dim_spatial = 0;
    std::uint64_t seed = 0;
    std::uint64_t digest = 0;
    std::vector<std::uint32_t> first_visible;
    std::vector<std::array<double, 3>> centers;
};

void write_truth_sidecar(const std::filesystem::path& path, const SceneSpec& spec,
                         const GroundTruth& truth) {
    std::string text;
    char buf[256];
    auto emit = [&](const char* fmt, auto... args) {
        std::snprintf(buf, sizeof buf, fmt, args...);
        text += buf;
    };
    text += "# scene ground truth\n";
    emit("objects = %u\n", spec.object_count);
    emit("dim_visual = %u\n", spec.dim_visual);
    emit("dim_spatial = %u\n", spec.dim_spatial);
    emit("seed = %" PRIu64 "\n", spec.seed);
    emit("signature_digest = %016" PRIx64 "\n",
         signature_digest(truth.object_signatures));
    text += "first_visible =";
    for (std::uint32_t f : truth.first_visible_frame)
        emit(" %u", f);
    text += "\n";
    for (std::size_t k = 0; k < truth.object_centers.size(); ++k)
        emit("center %zu = %.17g %.17g %.17g\n", k, truth.object_centers[k][0],
             truth.object_centers[k][1], truth.object_centers[k][2]);
    std::vector<std::uint8_t> bytes(text.begin(), text.end());
    write_file_bytes(path, bytes);
}

TruthSidecar read_truth_sidecar(const std::filesystem::path& path) {
    const std::vector<std::uint8_t> bytes = read_file_bytes(path);
    const std::string text(bytes.begin(), bytes.end());
    TruthSidecar t;
    bool have_digest = false;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t nl = text.find('\n', pos);
        if (nl == std::string::npos)
            nl = text.size();
        const std::string line = text.substr(pos, nl - pos);
        pos = nl + 1;
        if (line.empty() || line[0] == '#')
            continue;
        unsigned u = 0;
        unsigned long long v = 0;
        std::size_t idx = 0;
        double x, y, z;
        if (std::sscanf(line.c_str(), "objects = %u", &u) == 1) {
            t.objects = u;
        } else if (std::sscanf(line.c_str(), "dim_visual = %u", &u) == 1) {
            t.dim_visual = u;
        } else if (std::sscanf(line.c_str(), "dim_spatial = %u", &u) == 1) {
            t.dim_spatial = u;
        } else if (std::sscanf(line.c_str(), "seed = %llu", &v) == 1) {
            t.seed = v;
        } else if (std::sscanf(line.c_str(), "signature_digest = %llx", &v) == 1) {
            t.digest = v;
            have_digest = true;
        } else if (line.rfind("first_visible =", 0) == 0) {
            const char* p = line.c_str() + 15;
            int consumed = 0;
            while (std::sscanf(p, " %u%n", &u, &consumed) == 1) {
                t.first_visible.push_back(u);
                p += consumed;
            }
        } else if (std::sscanf(line.c_str(), "center %zu = %lf %lf %lf", &idx,
                               &x, &y, &z) == 4) {
            if (idx != t.centers.size())
                throw FormatError("truth sidecar: centers out of order");
            t.centers.push_back({x, y, z});
        } else {
            throw FormatError("truth sidecar: unrecognized line: " + line);
        }
    }
    if (t.objects == 0 || !have_digest || t.centers.size() != t.objects ||
        t.first_visible.size() != t.objects)
        throw FormatError("truth sidecar: incomplete");
    return t;
}

std::string resolve_out(const std::string& cli_out, const ToolConfig& cfg) {
    if (!cli_out.empty())
        return cli_out;
    if (!cfg.run.out.empty())
        return cfg.run.out;
    throw UsageError("no output path: pass --out or set [run] out in the config");
}

struct CommonOpts {
    std::string config_path;
    std::string out;
    std::uint64_t seed = 0;
    CLI::Option* seed_opt = nullptr;
};

ToolConfig load_opts_config(const CommonOpts& o) {
    return o.config_path.empty() ? ToolConfig{} : load_config_file(o.config_path);
}

int cmd_synth(const CommonOpts& o) {
    ToolConfig cfg = load_opts_config(o);
    if (o.seed_opt->count() > 0)
        cfg.scene.seed = o.seed;
    const std::string out = resolve_out(o.out, cfg);

    const auto [bundle, truth] = generate_scene(cfg.scene);
    write_frame_bundle(bundle, out);
    const std::string truth_path = out + ".truth.txt";
    write_truth_sidecar(truth_path, cfg.scene, truth);
    if (cfg.run.verbosity > 0) {
        std::printf("wrote %s (frames=%u patches=%u tokens=%zu dims=%u+%u)\n",
                    out.c_str(), bundle.frame_count, bundle.patches_per_frame,
                    bundle.tokens.size(), bundle.dim_visual, bundle.dim_spatial);
        std::printf("wrote %s\n", truth_path.c_str());
    }
    return 0;
}

int cmd_build(const CommonOpts& o, const std::string& in_path) {
    ToolConfig cfg = load_opts_config(o);
    if (o.seed_opt->count() > 0)
        cfg.map.seed = o.seed;
    const std::string out = resolve_out(o.out, cfg);

    const FrameBundle bundle = read_frame_bundle(in_path);
    BuildStats stats;
    const CognitiveMap map = build_map(bundle, cfg.map, &stats);
    write_map(map, out);
    if (cfg.run.verbosity > 0) {
        std::printf("tokens_in=%" PRIu64 " dropped_low_confidence=%" PRIu64
                    " dropped_out_of_bounds=%" PRIu64 " bins=%" PRIu64
                    " sampled=%" PRIu64 "\n",
                    stats.tokens_in, stats.dropped_low_confidence,
                    stats.dropped_out_of_bounds, stats.bins, stats.sampled);
        std::printf("wrote %s (cells=%zu center=(%.6g, %.6g, %.6g))\n",
                    out.c_str(), map.cells.size(), map.center[0], map.center[1],
                    map.center[2]);
    }
    return 0;
}

int cmd_fuse(const CommonOpts& o, const std::string& map_path,
             const std::string& bundle_path, const std::string& params_path,
             const std::string& params_out, bool zero_init) {
    ToolConfig cfg = load_opts_config(o);
    if (o.seed_opt->count() > 0)
        cfg.cdif.seed = o.seed;
    const std::string out = resolve_out(o.out, cfg);

    const CognitiveMap map = read_map(map_path);
    FrameBundle bundle = read_frame_bundle(bundle_path);

    CdifParams params;
    if (!params_path.empty()) {
        params = read_cdif_params(params_path);
    } else {
        const std::uint32_t dm = bundle.dim_visual + bundle.dim_spatial;
        if (cfg.cdif.heads == 0 || dm % cfg.cdif.heads != 0)
            throw ConfigError("fuse: head count does not divide the map width");
        params = zero_init
                     ? make_zero_cdif_params<float>(bundle.dim_visual,
                                                    bundle.dim_spatial,
                                                    cfg.cdif.layers, cfg.cdif.heads)
                     : make_random_cdif_params<float>(bundle.dim_visual,
                                                     bundle.dim_spatial,
                                                     cfg.cdif.layers,
                                                     cfg.cdif.heads, cfg.cdif.seed);
        for (CdifLayerParams& layer : params.layers)
            layer.rope = Rope3dConfig::even_split(dm / cfg.cdif.heads,
                                                  cfg.cdif.frequency_base,
                                                  cfg.cdif.coordinate_scale);
    }
    if (!params_out.empty())
        write_cdif_params(params, params_out);

    FusionState state = make_fusion_state(bundle, map, params);
    const Matrix& fused = cdif_forward(state, params);
    for (std::size_t i = 0; i < bundle.tokens.size(); ++i)
        for (std::uint32_t k = 0; k < bundle.dim_visual; ++k)
            bundle.tokens[i].visual_feature[k] = fused.at(i, k);
    write_frame_bundle(bundle, out);
    if (cfg.run.verbosity > 0)
        std::printf("wrote %s (tokens=%zu cells=%zu layers=%zu heads=%u)\n",
                    out.c_str(), bundle.tokens.size(), map.cells.size(),
                    params.layers.size(),
                    params.layers.empty() ? 0 : params.layers[0].heads);
    return 0;
}

int cmd_query(const std::string& map_path, const std::string& truth_path,
              const std::string& kind, std::uint32_t a, std::uint32_t b) {
    const CognitiveMap map = read_map(map_path);
    const TruthSidecar truth = read_truth_sidecar(truth_path);

    const std::vector<std::vector<float>> sigs =
        object_signatures(truth.objects, truth.dim_visual, truth.seed);
    if (signature_digest(sigs) != truth.digest)
        throw ContractError("query: signature digest mismatch; the sidecar was "
                            "built with different scene settings");

    if (kind == "appearance-order") {
        const AppearanceOrder ao = query_appearance_order(map, sigs);
        std::vector<std::uint32_t> expected;
        for (std::uint32_t k = 0; k < truth.objects; ++k)
            expected.push_back(k);
        std::sort(expected.begin(), expected.end(),
                  [&truth](std::uint32_t x, std::uint32_t y) {
                      return truth.first_visible[x] < truth.first_visible[y];
                  });
        std::string line = "order:";
        for (std::uint32_t id : ao.order)
            line += " " + std::to_string(id);
        std::puts(line.c_str());
        line = "expected:";
        for (std::uint32_t id : expected)
            line += " " + std::to_string(id);
        std::puts(line.c_str());
        if (!ao.unplaced.empty()) {
            line = "unplaced:";
            for (std::uint32_t id : ao.unplaced)
                line += " " + std::to_string(id);
            std::puts(line.c_str());
        }
        std::printf("match: %s\n",
                    ao.unplaced.empty() && ao.order == expected ? "yes" : "no");
        return 0;
    }
    if (kind == "object-distance") {
        if (a >= truth.objects || b >= truth.objects)
            throw UsageError("query: object id out of range");
        const double got = query_object_distance(map, sigs, a, b);
        const std::array<double, 3>& ca = truth.centers[a];
        const std::array<double, 3>& cb = truth.centers[b];
        const double dx = ca[0] - cb[0], dy = ca[1] - cb[1], dz = ca[2] - cb[2];
        const double want = std::sqrt(dx * dx + dy * dy + dz * dz);
        std::printf("distance: %.6f\nexpected: %.6f\nerror: %.6f\n", got, want,
                    std::abs(got - want));
        return 0;
    }
    if (kind == "voxel-count") {
        const std::vector<std::uint64_t> counts = query_voxel_counts(map, sigs);
        for (std::size_t k = 0; k < counts.size(); ++k)
            std::printf("object %zu: %" PRIu64 " cells\n", k, counts[k]);
        return 0;
    }
    throw UsageError("query: unknown kind '" + kind +
                     "' (expected appearance-order, object-distance, voxel-count)");
}

int cmd_verify(const std::string& suite) {
    std::vector<std::string> to_run;
    if (suite == "all")
        to_run = suite_names();
    else
        to_run.push_back(suite);
    std::uint32_t failed = 0;
    for (const std::string& name : to_run) {
        const SuiteResult r = run_suite(name);
        std::printf("suite %-13s %s  (%s)\n", (name + ":").c_str(),
                    r.passed ? "PASS" : "FAIL", r.detail.c_str());
        std::fflush(stdout);
        if (!r.passed)
            ++failed;
    }
    if (failed > 0)
        throw VerifyError(std::to_string(failed) + " suite(s) failed");
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"voxel cognitive map toolkit"};
    app.require_subcommand(1);

    CommonOpts synth_o, build_o, fuse_o;
    std::string build_in;
    std::string fuse_map, fuse_bundle, fuse_params, fuse_params_out;
    bool fuse_zero_init = false;
    std::string query_map, query_truth, query_kind = "appearance-order";
    std::uint32_t query_a = 0, query_b = 0;
    std::string verify_suite = "all";

    CLI::App* synth = app.add_subcommand("synth", "generate a synthetic scene bundle");
    synth->add_option("--config", synth_o.config_path, "config file");
    synth->add_option("--out", synth_o.out, "output bundle path");
    synth_o.seed_opt = synth->add_option("--seed", synth_o.seed, "scene seed override");

    CLI::App* build = app.add_subcommand("build", "build a map from a bundle");
    build->add_option("--in", build_in, "input bundle")->required();
    build->add_option("--config", build_o.config_path, "config file");
    build->add_option("--out", build_o.out, "output map path");
    build_o.seed_opt = build->add_option("--seed", build_o.seed, "sampling seed override");

    CLI::App* fuse = app.add_subcommand("fuse", "run the fusion stack over a bundle");
    fuse->add_option("--map", fuse_map, "input map")->required();
    fuse->add_option("--bundle", fuse_bundle, "input bundle")->required();
    fuse->add_option("--params", fuse_params, "parameter file (random init when absent)");
    fuse->add_option("--params-out", fuse_params_out, "write the used parameters here");
    fuse->add_flag("--zero-init", fuse_zero_init, "zero parameters (identity stack)");
    fuse->add_option("--config", fuse_o.config_path, "config file");
    fuse->add_option("--out", fuse_o.out, "output bundle path");
    fuse_o.seed_opt = fuse->add_option("--seed", fuse_o.seed, "init seed override");

    CLI::App* query = app.add_subcommand("query", "query a map against ground truth");
    query->add_option("--map", query_map, "input map")->required();
    query->add_option("--truth", query_truth, "ground truth sidecar")->required();
    query->add_option("--kind", query_kind,
                      "appearance-order | object-distance | voxel-count");
    query->add_option("--a", query_a, "first object id");
    query->add_option("--b", query_b, "second object id");

    CLI::App* verify = app.add_subcommand("verify", "run verification suites");
    verify->add_option("--suite", verify_suite,
                       "suite name, or 'all' for every suite");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (synth->parsed())
            return cmd_synth(synth_o);
        if (build->parsed())
            return cmd_build(build_o, build_in);
        if (fuse->parsed())
            return cmd_fuse(fuse_o, fuse_map, fuse_bundle, fuse_params,
                            fuse_params_out, fuse_zero_init);
        if (query->parsed())
            return cmd_query(query_map, query_truth, query_kind, query_a, query_b);
        if (verify->parsed())
            return cmd_verify(verify_suite);
    } catch (const UsageError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const FormatError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    } catch (const ContractError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 4;
    } catch (const VerifyError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 5;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
