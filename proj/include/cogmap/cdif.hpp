#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "cogmap/autodiff.hpp"
#include "cogmap/cognitive_map.hpp"
#include "cogmap/frame_bundle.hpp"
#include "cogmap/tensor.hpp"

namespace cogmap {

// Rotary embedding over continuous 3D coordinates. Channel pairs are
// partitioned per axis in x, y, z order; pair k of an axis with n pairs
// rotates by (coord / coordinate_scale) * frequency_base^(-k / n). Attention
// logits between roped vectors then depend only on coordinate differences.
struct Rope3dConfig {
    std::uint32_t head_dim = 0;                 // even
    std::array<std::uint32_t, 3> axis_pairs{};  // n_x, n_y, n_z
    double frequency_base = 10000.0;
    double coordinate_scale = 1.0;

    // head_dim/2 pairs split as evenly as possible, remainder to x then y.
    static Rope3dConfig even_split(std::uint32_t head_dim,
                                   double frequency_base = 10000.0,
                                   double coordinate_scale = 1.0);
    void validate() const; // throws ConfigError
};

// Rotates every head_dim-sized block of each row by that row's coordinate.
// x.cols must be a multiple of cfg.head_dim; coords.size() must equal x.rows.
// Angles are computed in double regardless of storage type.
template <typename S>
Mat<S> rope3d_apply(const Mat<S>& x,
                    const std::vector<std::array<double, 3>>& coords,
                    const Rope3dConfig& cfg);

// One fusion layer. Map width D_m = D_v + D_s; attention runs at width D_m
// in both sites. Per-tensor shapes:
//   map_coord_mlp 3 -> D_m, visual_coord_mlp 3 -> D_v,
//   self_q/k/v/out D_m -> D_m, cross_q D_v -> D_m, cross_k/v/out D_m -> D_m,
//   gate_mlp D_v -> D_v, ffn D_m -> D_v. MLP hidden width = output width.
template <typename S>
struct CdifLayerParamsT {
    MlpParamsT<S> map_coord_mlp;
    MlpParamsT<S> visual_coord_mlp;
    LinearParamsT<S> self_q, self_k, self_v, self_out;
    LinearParamsT<S> cross_q, cross_k, cross_v, cross_out;
    MlpParamsT<S> gate_mlp;
    MlpParamsT<S> ffn;
    std::uint32_t heads = 4;
    bool map_residual = true;
    Rope3dConfig rope;
};

template <typename S>
struct CdifParamsT {
    std::uint32_t dim_visual = 0;  // D_v
    std::uint32_t dim_spatial = 0; // D_s
    std::vector<CdifLayerParamsT<S>> layers;

    std::uint32_t dim_map() const { return dim_visual + dim_spatial; }
    void validate() const; // throws ConfigError on any shape inconsistency
};

using CdifLayerParams = CdifLayerParamsT<float>;
using CdifParams = CdifParamsT<float>;
using CdifLayerParamsD = CdifLayerParamsT<double>;
using CdifParamsD = CdifParamsT<double>;

// Mutable state threaded through the layers. Coordinates are fixed; only
// the two token matrices evolve.
template <typename S>
struct FusionStateT {
    Mat<S> visual;                                    // tokens x D_v
    std::vector<std::array<double, 3>> visual_coords; // recentered
    Mat<S> map;                                       // cells x D_m
    std::vector<std::array<double, 3>> map_coords;
    std::uint32_t layer_index = 0;
};

using FusionState = FusionStateT<float>;
using FusionStateD = FusionStateT<double>;

// Self-attention over map tokens. Q/K come from coordinate-injected tokens
// (roped), V from the raw tokens; residual when map_residual is set.
template <typename S>
Mat<S> map_reasoning(const Mat<S>& map_tokens,
                     const std::vector<std::array<double, 3>>& map_coords,
                     const CdifLayerParamsT<S>& p);

// Cross-attention of visual tokens over the updated map. attn_weights, when
// non-null, receives the softmaxed scores in the multihead_attention probe
// layout.
template <typename S>
Mat<S> map_reading(const Mat<S>& visual,
                   const std::vector<std::array<double, 3>>& visual_coords,
                   const Mat<S>& map_tokens,
                   const std::vector<std::array<double, 3>>& map_coords,
                   const CdifLayerParamsT<S>& p,
                   Mat<S>* attn_weights = nullptr);

// f_v + sigmoid(gate_mlp(f_v)) ⊙ ffn(f_fused). The gate sees only f_v.
template <typename S>
Mat<S> gated_update(const Mat<S>& visual, const Mat<S>& fused,
                    const CdifLayerParamsT<S>& p);

// Runs all layers in place: reasoning, reading, gated update per layer, map
// state persisting across layers. Returns a reference to state.visual.
template <typename S>
Mat<S>& cdif_forward(FusionStateT<S>& state, const CdifParamsT<S>& params);

// Builds the fusion inputs from a bundle and a map: visual rows are the
// bundle's visual features in global order, visual coordinates recentered by
// the map's center, map rows are cell features. Throws ConfigError when the
// widths disagree with params.
template <typename S>
FusionStateT<S> make_fusion_state(const FrameBundle& bundle,
                                  const CognitiveMap& map,
                                  const CdifParamsT<S>& params);

// Zero weights everywhere: the whole stack is the identity on visual tokens.
template <typename S>
CdifParamsT<S> make_zero_cdif_params(std::uint32_t dim_visual,
                                     std::uint32_t dim_spatial,
                                     std::uint32_t layer_count,
                                     std::uint32_t heads);

// Seeded Gaussian init, weights scaled by 1/sqrt(fan-in).
template <typename S>
CdifParamsT<S> make_random_cdif_params(std::uint32_t dim_visual,
                                       std::uint32_t dim_spatial,
                                       std::uint32_t layer_count,
                                       std::uint32_t heads, std::uint64_t seed);

CdifParamsD cdif_params_to_double(const CdifParams& p);

// Parameter file layout, little-endian:
//   magic "CDPF"; u32 version = 1; u32 D_v; u32 D_s; u32 layer count;
//   per layer: u32 heads, u8 map_residual, u32 rope head_dim,
//     u32 axis_pairs[3], f64 frequency_base, f64 coordinate_scale,
//     then the tensors in declaration order (each MLP as l1.w, l1.b, l2.w,
//     l2.b; each linear as w, b), every tensor shape-tagged:
//     u32 rows, u32 cols, f32 data row-major (bias rows = 1).
std::vector<std::uint8_t> encode_cdif_params(const CdifParams& p);
CdifParams decode_cdif_params(const std::vector<std::uint8_t>& bytes);
void write_cdif_params(const CdifParams& p, const std::filesystem::path& path);
CdifParams read_cdif_params(const std::filesystem::path& path);

// Tape replay of the double-precision forward pass for gradient checks.
// Registers every parameter tensor and returns the output node; bindings
// lists (name, id) pairs in registration order. Values match the plain
// double forward bit for bit.
struct CdifTapeBindings {
    std::vector<std::pair<std::string, ad::VarId>> params;
};

ad::VarId cdif_tape_forward(ad::Tape& tape, const CdifParamsD& params,
                            const MatrixD& visual,
                            const std::vector<std::array<double, 3>>& visual_coords,
                            const MatrixD& map_tokens,
                            const std::vector<std::array<double, 3>>& map_coords,
                            CdifTapeBindings* bindings = nullptr);

} // namespace cogmap
