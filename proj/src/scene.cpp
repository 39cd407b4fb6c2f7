#include "cogmap/scene.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

#include "cogmap/rng.hpp"

namespace cogmap {

namespace {

constexpr double kObjectRadius = 0.15;
constexpr double kMinSeparation = 0.5;
constexpr double kMaxAbsCosine = 0.9;
constexpr int kMaxAttempts = 1000;

// Stream tags; golden files depend on these values.
constexpr std::uint64_t kTagVisualSig = 1;
constexpr std::uint64_t kTagSpatialSig = 2;
constexpr std::uint64_t kTagCenter = 3;
constexpr std::uint64_t kTagSchedule = 4;
constexpr std::uint64_t kTagSurface = 5;
constexpr std::uint64_t kTagNoise = 6;

double dot_d(const std::vector<float>& a, const std::vector<float>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        s += static_cast<double>(a[i]) * static_cast<double>(b[i]);
    return s;
}

// One unit vector per (id, attempt); attempts bump until the candidate is
// separable from every previously accepted signature.
std::vector<std::vector<float>> gen_signatures(std::uint32_t count,
                                               std::uint32_t dim,
                                               std::uint64_t seed,
                                               std::uint64_t tag) {
    if (dim < 2)
        throw ConfigError("signature dim must be >= 2");
    std::vector<std::vector<float>> sigs;
    sigs.reserve(count);
    for (std::uint32_t k = 0; k < count; ++k) {
        bool accepted = false;
        for (int attempt = 0; attempt < kMaxAttempts && !accepted; ++attempt) {
            Rng rng(derive_stream(seed, tag, k, static_cast<std::uint64_t>(attempt)));
            std::vector<double> v(dim);
            double sq = 0.0;
            for (double& x : v) {
                x = rng.normal();
                sq += x * x;
            }
            const double norm = std::sqrt(sq);
            if (norm < 1e-9)
                continue;
            std::vector<float> cand(dim);
            for (std::uint32_t i = 0; i < dim; ++i)
                cand[i] = static_cast<float>(v[i] / norm);
            bool separable = true;
            for (const auto& prev : sigs) {
                if (std::abs(dot_d(cand, prev)) >= kMaxAbsCosine) {
                    separable = false;
                    break;
                }
            }
            if (separable) {
                sigs.push_back(std::move(cand));
                accepted = true;
            }
        }
        if (!accepted)
            throw GenerationError("signature separation failed after 1000 attempts");
    }
    return sigs;
}

} // namespace

void SceneSpec::validate() const {
    if (object_count < 2)
        throw ConfigError("scene: need at least 2 objects");
    if (!(scene_extent > 0.0))
        throw ConfigError("scene: extent must be positive");
    if (points_per_object_per_frame < 1)
        throw ConfigError("scene: need at least 1 point per object per frame");
    if (feature_noise_sigma < 0.0 || coordinate_noise_sigma < 0.0)
        throw ConfigError("scene: noise sigmas must be >= 0");
    if (frames < object_count)
        throw ConfigError("scene: frames must be >= objects for distinct schedule slots");
    if (dim_visual < 2 || dim_spatial < 2)
        throw ConfigError("scene: feature dims must be >= 2");
}

std::vector<std::vector<float>> object_signatures(std::uint32_t count,
                                                  std::uint32_t dim,
                                                  std::uint64_t seed) {
    return gen_signatures(count, dim, seed, kTagVisualSig);
}

std::vector<float> object_signature(std::uint32_t object_id, std::uint32_t dim,
                                    std::uint64_t seed) {
    auto all = gen_signatures(object_id + 1, dim, seed, kTagVisualSig);
    return std::move(all.back());
}

std::uint64_t signature_digest(const std::vector<std::vector<float>>& sigs) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const auto& sig : sigs) {
        for (float v : sig) {
            const auto bits = std::bit_cast<std::uint32_t>(v);
            for (int i = 0; i < 4; ++i) {
                h ^= (bits >> (8 * i)) & 0xFF;
                h *= 0x100000001b3ULL;
            }
        }
    }
    return h;
}

std::pair<FrameBundle, GroundTruth> generate_scene(const SceneSpec& spec) {
    spec.validate();
    const std::uint32_t K = spec.object_count;
    const std::uint32_t N = spec.frames;
    const std::uint32_t ppf = spec.points_per_object_per_frame;

    GroundTruth truth;
    truth.object_signatures = gen_signatures(K, spec.dim_visual, spec.seed,
                                             kTagVisualSig);
    truth.spatial_signatures = gen_signatures(K, spec.dim_spatial, spec.seed,
                                              kTagSpatialSig);

    // Rejection-sampled centers with minimum separation.
    truth.object_centers.reserve(K);
    for (std::uint32_t k = 0; k < K; ++k) {
        bool placed = false;
        for (int attempt = 0; attempt < kMaxAttempts && !placed; ++attempt) {
            Rng rng(derive_stream(spec.seed, kTagCenter, k,
                                  static_cast<std::uint64_t>(attempt)));
            std::array<double, 3> c;
            for (double& x : c)
                x = rng.uniform(-spec.scene_extent, spec.scene_extent);
            bool ok = true;
            for (const auto& prev : truth.object_centers) {
                const double dx = c[0] - prev[0];
                const double dy = c[1] - prev[1];
                const double dz = c[2] - prev[2];
                if (std::sqrt(dx * dx + dy * dy + dz * dz) < kMinSeparation) {
                    ok = false;
                    break;
                }
            }
            if (ok) {
                truth.object_centers.push_back(c);
                placed = true;
            }
        }
        if (!placed)
            throw GenerationError("object placement failed after 1000 attempts");
    }

    truth.pairwise_center_distances.assign(K, std::vector<double>(K, 0.0));
    for (std::uint32_t a = 0; a < K; ++a)
        for (std::uint32_t b = 0; b < K; ++b) {
            const double dx = truth.object_centers[a][0] - truth.object_centers[b][0];
            const double dy = truth.object_centers[a][1] - truth.object_centers[b][1];
            const double dz = truth.object_centers[a][2] - truth.object_centers[b][2];
            truth.pairwise_center_distances[a][b] = std::sqrt(dx * dx + dy * dy + dz * dz);
        }

    // Stagger slots floor(j * N / K), dealt to objects by a seeded shuffle.
    std::vector<std::uint32_t> slots(K);
    for (std::uint32_t j = 0; j < K; ++j)
        slots[j] = static_cast<std::uint32_t>(
            (static_cast<std::uint64_t>(j) * N) / K);
    std::vector<std::uint32_t> perm(K);
    for (std::uint32_t j = 0; j < K; ++j)
        perm[j] = j;
    Rng shuffle_rng(derive_stream(spec.seed, kTagSchedule));
    for (std::uint32_t j = K; j > 1; --j) {
        const std::uint32_t r = static_cast<std::uint32_t>(shuffle_rng.bounded(j));
        std::swap(perm[j - 1], perm[r]);
    }
    truth.first_visible_frame.resize(K);
    for (std::uint32_t k = 0; k < K; ++k)
        truth.first_visible_frame[k] = slots[perm[k]];

    // Canonical surface point set per object, re-observed by every frame in
    // which the object is visible. Re-observation therefore hits the same
    // voxels, which is what makes the map size independent of frame count.
    std::vector<std::vector<std::array<double, 3>>> surface(K);
    for (std::uint32_t k = 0; k < K; ++k) {
        surface[k].resize(ppf);
        for (std::uint32_t p = 0; p < ppf; ++p) {
            Rng rng(derive_stream(spec.seed, kTagSurface, k, p));
            double dx, dy, dz, norm;
            do {
                dx = rng.normal();
                dy = rng.normal();
                dz = rng.normal();
                norm = std::sqrt(dx * dx + dy * dy + dz * dz);
            } while (norm < 1e-9);
            surface[k][p] = {
                truth.object_centers[k][0] + kObjectRadius * dx / norm,
                truth.object_centers[k][1] + kObjectRadius * dy / norm,
                truth.object_centers[k][2] + kObjectRadius * dz / norm,
            };
        }
    }

    FrameBundle bundle;
    bundle.frame_count = N;
    bundle.patches_per_frame = K * ppf;
    bundle.dim_visual = spec.dim_visual;
    bundle.dim_spatial = spec.dim_spatial;
    bundle.frame_timestamps.resize(N);
    bundle.tokens.reserve(static_cast<std::size_t>(N) * K * ppf);

    const double sigma_c = spec.coordinate_noise_sigma;
    const double sigma_f = spec.feature_noise_sigma;
    std::uint64_t gi = 0;
    for (std::uint32_t f = 0; f < N; ++f) {
        bundle.frame_timestamps[f] = f;
        for (std::uint32_t k = 0; k < K; ++k) {
            const bool visible = f >= truth.first_visible_frame[k];
            if (!visible) {
                // Filler: the encoder saw no geometry for these patches.
                for (std::uint32_t p = 0; p < ppf; ++p) {
                    PatchToken t;
                    t.visual_feature.assign(spec.dim_visual, 0.0f);
                    t.spatial_feature.assign(spec.dim_spatial, 0.0f);
                    t.coordinate = {0.0f, 0.0f, 0.0f};
                    t.confidence = 0.0f;
                    t.timestamp = f;
                    t.global_index = gi++;
                    bundle.tokens.push_back(std::move(t));
                }
                continue;
            }
            Rng rng(derive_stream(spec.seed, kTagNoise, f, k));
            for (std::uint32_t p = 0; p < ppf; ++p) {
                PatchToken t;
                double noise_sq = 0.0;
                std::array<double, 3> coord = surface[k][p];
                if (sigma_c > 0.0) {
                    for (double& x : coord) {
                        const double e = sigma_c * rng.normal();
                        x += e;
                        noise_sq += e * e;
                    }
                }
                t.coordinate = {static_cast<float>(coord[0]),
                                static_cast<float>(coord[1]),
                                static_cast<float>(coord[2])};
                double conf = 1.0;
                if (sigma_c > 0.0)
                    conf = std::exp(-std::sqrt(noise_sq) / sigma_c);
                t.confidence = static_cast<float>(std::min(1.0, std::max(0.0, conf)));

                if (sigma_f > 0.0) {
                    std::vector<double> v(spec.dim_visual);
                    double sq = 0.0;
                    for (std::uint32_t i = 0; i < spec.dim_visual; ++i) {
                        v[i] = static_cast<double>(truth.object_signatures[k][i]) +
                               sigma_f * rng.normal();
                        sq += v[i] * v[i];
                    }
                    const double norm = std::sqrt(sq);
                    t.visual_feature.resize(spec.dim_visual);
                    for (std::uint32_t i = 0; i < spec.dim_visual; ++i)
                        t.visual_feature[i] = static_cast<float>(
                            norm > 1e-12 ? v[i] / norm : v[i]);
                    t.spatial_feature.resize(spec.dim_spatial);
                    for (std::uint32_t i = 0; i < spec.dim_spatial; ++i)
                        t.spatial_feature[i] = static_cast<float>(
                            static_cast<double>(truth.spatial_signatures[k][i]) +
                            sigma_f * rng.normal());
                } else {
                    // Zero noise keeps features bitwise equal to signatures;
                    // renormalizing would perturb the last bit.
                    t.visual_feature = truth.object_signatures[k];
                    t.spatial_feature = truth.spatial_signatures[k];
                }
                t.timestamp = f;
                t.global_index = gi++;
                bundle.tokens.push_back(std::move(t));
            }
        }
    }
    bundle.validate();
    return {std::move(bundle), std::move(truth)};
}

} // namespace cogmap
