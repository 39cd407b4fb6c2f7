#include "cogmap/cdif.hpp"

#include <cmath>

#include "cogmap/io_util.hpp"
#include "cogmap/rng.hpp"

namespace cogmap {

namespace {

constexpr std::uint64_t kInitStreamTag = 0x74'69'6E'69ULL; // "init"

template <typename S>
Mat<S> coord_matrix(const std::vector<std::array<double, 3>>& coords) {
    Mat<S> m(coords.size(), 3);
    for (std::size_t i = 0; i < coords.size(); ++i)
        for (int a = 0; a < 3; ++a)
            m.at(i, a) = static_cast<S>(coords[i][a]);
    return m;
}

template <typename S>
void check_linear_shape(const LinearParamsT<S>& p, std::uint32_t out,
                        std::uint32_t in, const std::string& name) {
    if (p.weight.rows != out || p.weight.cols != in || p.bias.size() != out)
        throw ConfigError("cdif params: " + name + " must be " +
                          std::to_string(out) + "x" + std::to_string(in));
}

// MLP hidden width equals output width throughout the stack.
template <typename S>
void check_mlp_shape(const MlpParamsT<S>& p, std::uint32_t out, std::uint32_t in,
                     const std::string& name) {
    check_linear_shape(p.layer1, out, in, name + ".layer1");
    check_linear_shape(p.layer2, out, out, name + ".layer2");
}

} // namespace

Rope3dConfig Rope3dConfig::even_split(std::uint32_t head_dim,
                                      double frequency_base,
                                      double coordinate_scale) {
    Rope3dConfig cfg;
    cfg.head_dim = head_dim;
    cfg.frequency_base = frequency_base;
    cfg.coordinate_scale = coordinate_scale;
    const std::uint32_t pairs = head_dim / 2;
    cfg.axis_pairs = {pairs / 3 + (pairs % 3 >= 1 ? 1u : 0u),
                      pairs / 3 + (pairs % 3 >= 2 ? 1u : 0u), pairs / 3};
    cfg.validate();
    return cfg;
}

void Rope3dConfig::validate() const {
    if (head_dim < 2 || head_dim % 2 != 0)
        throw ConfigError("rope: head_dim must be even and >= 2");
    if (2 * (axis_pairs[0] + axis_pairs[1] + axis_pairs[2]) != head_dim)
        throw ConfigError("rope: axis pair counts do not cover head_dim");
    if (!(frequency_base > 0.0) || !std::isfinite(frequency_base))
        throw ConfigError("rope: frequency base must be positive");
    if (!(coordinate_scale > 0.0) || !std::isfinite(coordinate_scale))
        throw ConfigError("rope: coordinate scale must be positive");
}

template <typename S>
Mat<S> rope3d_apply(const Mat<S>& x,
                    const std::vector<std::array<double, 3>>& coords,
                    const Rope3dConfig& cfg) {
    cfg.validate();
    if (x.cols == 0 || x.cols % cfg.head_dim != 0)
        throw ConfigError("rope: vector width is not a multiple of head_dim");
    if (coords.size() != x.rows)
        throw ConfigError("rope: coordinate count does not match row count");

    const std::uint32_t pairs = cfg.head_dim / 2;
    std::vector<double> freq(pairs);
    std::vector<int> axis_of(pairs);
    std::uint32_t cur = 0;
    for (int axis = 0; axis < 3; ++axis) {
        const std::uint32_t n = cfg.axis_pairs[axis];
        for (std::uint32_t k = 0; k < n; ++k, ++cur) {
            freq[cur] = std::pow(cfg.frequency_base,
                                 -static_cast<double>(k) / static_cast<double>(n));
            axis_of[cur] = axis;
        }
    }

    const std::size_t blocks = x.cols / cfg.head_dim;
    Mat<S> y(x.rows, x.cols);
    std::vector<double> cs(pairs), sn(pairs);
    for (std::size_t i = 0; i < x.rows; ++i) {
        for (std::uint32_t p = 0; p < pairs; ++p) {
            const double theta =
                (coords[i][axis_of[p]] / cfg.coordinate_scale) * freq[p];
            cs[p] = std::cos(theta);
            sn[p] = std::sin(theta);
        }
        for (std::size_t b = 0; b < blocks; ++b) {
            const std::size_t off = b * cfg.head_dim;
            for (std::uint32_t p = 0; p < pairs; ++p) {
                const double x0 = static_cast<double>(x.at(i, off + 2 * p));
                const double x1 = static_cast<double>(x.at(i, off + 2 * p + 1));
                y.at(i, off + 2 * p) = static_cast<S>(x0 * cs[p] - x1 * sn[p]);
                y.at(i, off + 2 * p + 1) = static_cast<S>(x0 * sn[p] + x1 * cs[p]);
            }
        }
    }
    return y;
}

template <typename S>
void CdifParamsT<S>::validate() const {
    if (dim_visual < 1)
        throw ConfigError("cdif params: visual dim must be >= 1");
    if (layers.empty())
        throw ConfigError("cdif params: need at least one layer");
    const std::uint32_t dv = dim_visual;
    const std::uint32_t dm = dim_map();
    for (const CdifLayerParamsT<S>& l : layers) {
        if (l.heads < 1)
            throw ConfigError("cdif params: heads must be >= 1");
        if (dm % l.heads != 0)
            throw ConfigError("cdif params: map width not divisible by heads");
        const std::uint32_t hd = dm / l.heads;
        if (l.rope.head_dim != hd)
            throw ConfigError("cdif params: rope head_dim != map width / heads");
        l.rope.validate();
        check_mlp_shape(l.map_coord_mlp, dm, 3, "map_coord_mlp");
        check_mlp_shape(l.visual_coord_mlp, dv, 3, "visual_coord_mlp");
        check_linear_shape(l.self_q, dm, dm, "self_q");
        check_linear_shape(l.self_k, dm, dm, "self_k");
        check_linear_shape(l.self_v, dm, dm, "self_v");
        check_linear_shape(l.self_out, dm, dm, "self_out");
        check_linear_shape(l.cross_q, dm, dv, "cross_q");
        check_linear_shape(l.cross_k, dm, dm, "cross_k");
        check_linear_shape(l.cross_v, dm, dm, "cross_v");
        check_linear_shape(l.cross_out, dm, dm, "cross_out");
        check_mlp_shape(l.gate_mlp, dv, dv, "gate_mlp");
        check_mlp_shape(l.ffn, dv, dm, "ffn");
    }
}

template <typename S>
Mat<S> map_reasoning(const Mat<S>& map_tokens,
                     const std::vector<std::array<double, 3>>& map_coords,
                     const CdifLayerParamsT<S>& p) {
    if (map_tokens.rows == 0)
        throw ContractError("map reasoning: empty map");
    if (map_coords.size() != map_tokens.rows)
        throw ConfigError("map reasoning: coordinate count mismatch");
    const Mat<S> cmat = coord_matrix<S>(map_coords);
    const Mat<S> injected = add(map_tokens, mlp(cmat, p.map_coord_mlp));
    const Mat<S> q = rope3d_apply(linear(injected, p.self_q), map_coords, p.rope);
    const Mat<S> k = rope3d_apply(linear(injected, p.self_k), map_coords, p.rope);
    // Values come from the raw map tokens, before coordinate injection.
    const Mat<S> v = linear(map_tokens, p.self_v);
    const Mat<S> attn = multihead_attention(q, k, v, p.heads);
    const Mat<S> out = linear(attn, p.self_out);
    return p.map_residual ? add(map_tokens, out) : out;
}

template <typename S>
Mat<S> map_reading(const Mat<S>& visual,
                   const std::vector<std::array<double, 3>>& visual_coords,
                   const Mat<S>& map_tokens,
                   const std::vector<std::array<double, 3>>& map_coords,
                   const CdifLayerParamsT<S>& p, Mat<S>* attn_weights) {
    if (map_tokens.rows == 0)
        throw ContractError("map reading: empty map");
    if (visual_coords.size() != visual.rows || map_coords.size() != map_tokens.rows)
        throw ConfigError("map reading: coordinate count mismatch");
    const Mat<S> cmat = coord_matrix<S>(visual_coords);
    const Mat<S> injected = add(visual, mlp(cmat, p.visual_coord_mlp));
    const Mat<S> q = rope3d_apply(linear(injected, p.cross_q), visual_coords, p.rope);
    const Mat<S> k = rope3d_apply(linear(map_tokens, p.cross_k), map_coords, p.rope);
    const Mat<S> v = linear(map_tokens, p.cross_v);
    const Mat<S> attn = multihead_attention(q, k, v, p.heads, attn_weights);
    return linear(attn, p.cross_out);
}

template <typename S>
Mat<S> gated_update(const Mat<S>& visual, const Mat<S>& fused,
                    const CdifLayerParamsT<S>& p) {
    const Mat<S> gate = sigmoid_map(mlp(visual, p.gate_mlp));
    return add(visual, hadamard(gate, mlp(fused, p.ffn)));
}

template <typename S>
Mat<S>& cdif_forward(FusionStateT<S>& state, const CdifParamsT<S>& params) {
    params.validate();
    if (state.visual.cols != params.dim_visual)
        throw ConfigError("cdif forward: visual width != params visual dim");
    if (state.map.cols != params.dim_map())
        throw ConfigError("cdif forward: map width != params map dim");
    if (state.visual_coords.size() != state.visual.rows ||
        state.map_coords.size() != state.map.rows)
        throw ConfigError("cdif forward: coordinate count mismatch");
    for (const CdifLayerParamsT<S>& layer : params.layers) {
        state.map = map_reasoning(state.map, state.map_coords, layer);
        const Mat<S> fused = map_reading(state.visual, state.visual_coords,
                                         state.map, state.map_coords, layer);
        state.visual = gated_update(state.visual, fused, layer);
        ++state.layer_index;
    }
    return state.visual;
}

template <typename S>
FusionStateT<S> make_fusion_state(const FrameBundle& bundle,
                                  const CognitiveMap& map,
                                  const CdifParamsT<S>& params) {
    if (bundle.dim_visual != params.dim_visual ||
        bundle.dim_spatial != params.dim_spatial)
        throw ConfigError("fusion state: bundle dims do not match params");
    if (map.feature_dim != params.dim_map())
        throw ConfigError("fusion state: map feature dim does not match params");
    FusionStateT<S> st;
    st.visual = Mat<S>(bundle.tokens.size(), bundle.dim_visual);
    st.visual_coords.resize(bundle.tokens.size());
    for (std::size_t i = 0; i < bundle.tokens.size(); ++i) {
        const PatchToken& t = bundle.tokens[i];
        for (std::uint32_t c = 0; c < bundle.dim_visual; ++c)
            st.visual.at(i, c) = static_cast<S>(t.visual_feature[c]);
        for (int a = 0; a < 3; ++a)
            st.visual_coords[i][a] =
                static_cast<double>(t.coordinate[a]) - map.center[a];
    }
    st.map = Mat<S>(map.cells.size(), map.feature_dim);
    st.map_coords.resize(map.cells.size());
    for (std::size_t j = 0; j < map.cells.size(); ++j) {
        for (std::uint32_t c = 0; c < map.feature_dim; ++c)
            st.map.at(j, c) = static_cast<S>(map.cells[j].feature[c]);
        st.map_coords[j] = map.cells[j].coordinate;
    }
    return st;
}

namespace {

template <typename S>
LinearParamsT<S> zero_linear(std::uint32_t out, std::uint32_t in) {
    LinearParamsT<S> p;
    p.weight = Mat<S>(out, in);
    p.bias.assign(out, S(0));
    return p;
}

template <typename S>
MlpParamsT<S> zero_mlp(std::uint32_t out, std::uint32_t in) {
    MlpParamsT<S> p;
    p.layer1 = zero_linear<S>(out, in);
    p.layer2 = zero_linear<S>(out, out);
    return p;
}

template <typename S>
LinearParamsT<S> random_linear(std::uint32_t out, std::uint32_t in, Rng& rng) {
    LinearParamsT<S> p;
    p.weight = Mat<S>(out, in);
    const double scale = 0.5 / std::sqrt(static_cast<double>(in));
    for (S& v : p.weight.data)
        v = static_cast<S>(scale * rng.normal());
    p.bias.resize(out);
    for (S& v : p.bias)
        v = static_cast<S>(0.1 * rng.normal());
    return p;
}

template <typename S>
MlpParamsT<S> random_mlp(std::uint32_t out, std::uint32_t in, Rng& rng) {
    MlpParamsT<S> p;
    p.layer1 = random_linear<S>(out, in, rng);
    p.layer2 = random_linear<S>(out, out, rng);
    return p;
}

template <typename S>
CdifLayerParamsT<S> make_layer(std::uint32_t dv, std::uint32_t dm,
                               std::uint32_t heads, Rng* rng) {
    CdifLayerParamsT<S> l;
    l.heads = heads;
    l.rope = Rope3dConfig::even_split(dm / heads);
    if (rng) {
        l.map_coord_mlp = random_mlp<S>(dm, 3, *rng);
        l.visual_coord_mlp = random_mlp<S>(dv, 3, *rng);
        l.self_q = random_linear<S>(dm, dm, *rng);
        l.self_k = random_linear<S>(dm, dm, *rng);
        l.self_v = random_linear<S>(dm, dm, *rng);
        l.self_out = random_linear<S>(dm, dm, *rng);
        l.cross_q = random_linear<S>(dm, dv, *rng);
        l.cross_k = random_linear<S>(dm, dm, *rng);
        l.cross_v = random_linear<S>(dm, dm, *rng);
        l.cross_out = random_linear<S>(dm, dm, *rng);
        l.gate_mlp = random_mlp<S>(dv, dv, *rng);
        l.ffn.layer1 = random_linear<S>(dv, dm, *rng);
        l.ffn.layer2 = random_linear<S>(dv, dv, *rng);
    } else {
        l.map_coord_mlp = zero_mlp<S>(dm, 3);
        l.visual_coord_mlp = zero_mlp<S>(dv, 3);
        l.self_q = zero_linear<S>(dm, dm);
        l.self_k = zero_linear<S>(dm, dm);
        l.self_v = zero_linear<S>(dm, dm);
        l.self_out = zero_linear<S>(dm, dm);
        l.cross_q = zero_linear<S>(dm, dv);
        l.cross_k = zero_linear<S>(dm, dm);
        l.cross_v = zero_linear<S>(dm, dm);
        l.cross_out = zero_linear<S>(dm, dm);
        l.gate_mlp = zero_mlp<S>(dv, dv);
        l.ffn.layer1 = zero_linear<S>(dv, dm);
        l.ffn.layer2 = zero_linear<S>(dv, dv);
    }
    return l;
}

} // namespace

template <typename S>
CdifParamsT<S> make_zero_cdif_params(std::uint32_t dim_visual,
                                     std::uint32_t dim_spatial,
                                     std::uint32_t layer_count,
                                     std::uint32_t heads) {
    CdifParamsT<S> p;
    p.dim_visual = dim_visual;
    p.dim_spatial = dim_spatial;
    for (std::uint32_t l = 0; l < layer_count; ++l)
        p.layers.push_back(make_layer<S>(dim_visual, p.dim_map(), heads, nullptr));
    p.validate();
    return p;
}

template <typename S>
CdifParamsT<S> make_random_cdif_params(std::uint32_t dim_visual,
                                       std::uint32_t dim_spatial,
                                       std::uint32_t layer_count,
                                       std::uint32_t heads, std::uint64_t seed) {
    CdifParamsT<S> p;
    p.dim_visual = dim_visual;
    p.dim_spatial = dim_spatial;
    for (std::uint32_t l = 0; l < layer_count; ++l) {
        Rng rng(derive_stream(seed, kInitStreamTag, l));
        p.layers.push_back(make_layer<S>(dim_visual, p.dim_map(), heads, &rng));
    }
    p.validate();
    return p;
}

namespace {

template <typename From, typename To>
LinearParamsT<To> convert_linear(const LinearParamsT<From>& p) {
    LinearParamsT<To> out;
    out.weight = Mat<To>(p.weight.rows, p.weight.cols);
    for (std::size_t i = 0; i < p.weight.data.size(); ++i)
        out.weight.data[i] = static_cast<To>(p.weight.data[i]);
    out.bias.resize(p.bias.size());
    for (std::size_t i = 0; i < p.bias.size(); ++i)
        out.bias[i] = static_cast<To>(p.bias[i]);
    return out;
}

template <typename From, typename To>
MlpParamsT<To> convert_mlp(const MlpParamsT<From>& p) {
    MlpParamsT<To> out;
    out.layer1 = convert_linear<From, To>(p.layer1);
    out.layer2 = convert_linear<From, To>(p.layer2);
    return out;
}

} // namespace

CdifParamsD cdif_params_to_double(const CdifParams& p) {
    CdifParamsD out;
    out.dim_visual = p.dim_visual;
    out.dim_spatial = p.dim_spatial;
    out.layers.reserve(p.layers.size());
    for (const CdifLayerParams& l : p.layers) {
        CdifLayerParamsD d;
        d.map_coord_mlp = convert_mlp<float, double>(l.map_coord_mlp);
        d.visual_coord_mlp = convert_mlp<float, double>(l.visual_coord_mlp);
        d.self_q = convert_linear<float, double>(l.self_q);
        d.self_k = convert_linear<float, double>(l.self_k);
        d.self_v = convert_linear<float, double>(l.self_v);
        d.self_out = convert_linear<float, double>(l.self_out);
        d.cross_q = convert_linear<float, double>(l.cross_q);
        d.cross_k = convert_linear<float, double>(l.cross_k);
        d.cross_v = convert_linear<float, double>(l.cross_v);
        d.cross_out = convert_linear<float, double>(l.cross_out);
        d.gate_mlp = convert_mlp<float, double>(l.gate_mlp);
        d.ffn = convert_mlp<float, double>(l.ffn);
        d.heads = l.heads;
        d.map_residual = l.map_residual;
        d.rope = l.rope;
        out.layers.push_back(std::move(d));
    }
    return out;
}

namespace {

void write_tensor(ByteWriter& w, const Matrix& m) {
    w.u32(static_cast<std::uint32_t>(m.rows));
    w.u32(static_cast<std::uint32_t>(m.cols));
    for (float v : m.data)
        w.f32(v);
}

void write_linear(ByteWriter& w, const LinearParams& p) {
    write_tensor(w, p.weight);
    Matrix bias(1, p.bias.size());
    bias.data = p.bias;
    write_tensor(w, bias);
}

void write_mlp(ByteWriter& w, const MlpParams& p) {
    write_linear(w, p.layer1);
    write_linear(w, p.layer2);
}

Matrix read_tensor(ByteReader& r) {
    Matrix m;
    m.rows = r.u32();
    m.cols = r.u32();
    const std::uint64_t n = static_cast<std::uint64_t>(m.rows) * m.cols;
    if (n > (1ULL << 26))
        throw FormatError("CDPF: dimension overflow");
    m.data.resize(n);
    for (float& v : m.data)
        v = r.f32();
    return m;
}

LinearParams read_linear(ByteReader& r) {
    LinearParams p;
    p.weight = read_tensor(r);
    Matrix bias = read_tensor(r);
    if (bias.rows != 1)
        throw FormatError("CDPF: bias tensor must have one row");
    p.bias = std::move(bias.data);
    return p;
}

MlpParams read_mlp(ByteReader& r) {
    MlpParams p;
    p.layer1 = read_linear(r);
    p.layer2 = read_linear(r);
    return p;
}

} // namespace

std::vector<std::uint8_t> encode_cdif_params(const CdifParams& p) {
    p.validate();
    ByteWriter w;
    w.magic("CDPF");
    w.u32(1);
    w.u32(p.dim_visual);
    w.u32(p.dim_spatial);
    w.u32(static_cast<std::uint32_t>(p.layers.size()));
    for (const CdifLayerParams& l : p.layers) {
        w.u32(l.heads);
        w.u8(l.map_residual ? 1 : 0);
        w.u32(l.rope.head_dim);
        for (std::uint32_t n : l.rope.axis_pairs)
            w.u32(n);
        w.f64(l.rope.frequency_base);
        w.f64(l.rope.coordinate_scale);
        write_mlp(w, l.map_coord_mlp);
        write_mlp(w, l.visual_coord_mlp);
        write_linear(w, l.self_q);
        write_linear(w, l.self_k);
        write_linear(w, l.self_v);
        write_linear(w, l.self_out);
        write_linear(w, l.cross_q);
        write_linear(w, l.cross_k);
        write_linear(w, l.cross_v);
        write_linear(w, l.cross_out);
        write_mlp(w, l.gate_mlp);
        write_mlp(w, l.ffn);
    }
    return w.bytes();
}

CdifParams decode_cdif_params(const std::vector<std::uint8_t>& bytes) {
    ByteReader r(bytes.data(), bytes.size());
    r.expect_magic("CDPF", "CDPF");
    if (r.u32() != 1)
        throw FormatError("CDPF: unsupported version");
    CdifParams p;
    p.dim_visual = r.u32();
    p.dim_spatial = r.u32();
    const std::uint32_t layer_count = r.u32();
    if (layer_count > 1024)
        throw FormatError("CDPF: dimension overflow");
    for (std::uint32_t li = 0; li < layer_count; ++li) {
        CdifLayerParams l;
        l.heads = r.u32();
        l.map_residual = r.u8() != 0;
        l.rope.head_dim = r.u32();
        for (std::uint32_t& n : l.rope.axis_pairs)
            n = r.u32();
        l.rope.frequency_base = r.f64();
        l.rope.coordinate_scale = r.f64();
        l.map_coord_mlp = read_mlp(r);
        l.visual_coord_mlp = read_mlp(r);
        l.self_q = read_linear(r);
        l.self_k = read_linear(r);
        l.self_v = read_linear(r);
        l.self_out = read_linear(r);
        l.cross_q = read_linear(r);
        l.cross_k = read_linear(r);
        l.cross_v = read_linear(r);
        l.cross_out = read_linear(r);
        l.gate_mlp = read_mlp(r);
        l.ffn = read_mlp(r);
        p.layers.push_back(std::move(l));
    }
    if (!r.at_end())
        throw FormatError("CDPF: trailing bytes");
    try {
        p.validate();
    } catch (const ConfigError& e) {
        throw FormatError(std::string("CDPF: invalid content: ") + e.what());
    }
    return p;
}

void write_cdif_params(const CdifParams& p, const std::filesystem::path& path) {
    write_file_bytes(path, encode_cdif_params(p));
}

CdifParams read_cdif_params(const std::filesystem::path& path) {
    return decode_cdif_params(read_file_bytes(path));
}

namespace {

struct TapeLinear {
    ad::VarId w, b;
};

struct TapeMlp {
    TapeLinear l1, l2;
};

TapeLinear reg_linear(ad::Tape& t, const LinearParamsT<double>& p,
                      const std::string& name, CdifTapeBindings* bindings) {
    TapeLinear out;
    out.w = t.param(p.weight);
    MatrixD bias(1, p.bias.size());
    bias.data = p.bias;
    out.b = t.param(bias);
    if (bindings) {
        bindings->params.emplace_back(name + ".weight", out.w);
        bindings->params.emplace_back(name + ".bias", out.b);
    }
    return out;
}

TapeMlp reg_mlp(ad::Tape& t, const MlpParamsT<double>& p, const std::string& name,
                CdifTapeBindings* bindings) {
    TapeMlp out;
    out.l1 = reg_linear(t, p.layer1, name + ".layer1", bindings);
    out.l2 = reg_linear(t, p.layer2, name + ".layer2", bindings);
    return out;
}

ad::VarId tape_mlp(ad::Tape& t, ad::VarId x, const TapeMlp& m) {
    return t.linear(t.gelu(t.linear(x, m.l1.w, m.l1.b)), m.l2.w, m.l2.b);
}

ad::VarId tape_rope(ad::Tape& t, ad::VarId x,
                    const std::vector<std::array<double, 3>>& coords,
                    const Rope3dConfig& cfg) {
    std::vector<std::array<double, 3>> neg(coords.size());
    for (std::size_t i = 0; i < coords.size(); ++i)
        neg[i] = {-coords[i][0], -coords[i][1], -coords[i][2]};
    // Rotations are orthogonal, so the adjoint is the inverse rotation,
    // i.e. the same map with negated coordinates.
    return t.linear_map(
        x,
        [coords, cfg](const MatrixD& m) { return rope3d_apply(m, coords, cfg); },
        [neg, cfg](const MatrixD& m) { return rope3d_apply(m, neg, cfg); });
}

ad::VarId tape_mha(ad::Tape& t, ad::VarId q, ad::VarId k, ad::VarId v,
                   std::uint32_t heads) {
    const std::size_t dh = t.value(q).cols / heads;
    const std::size_t dv = t.value(v).cols / heads;
    const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
    std::vector<ad::VarId> outs;
    for (std::uint32_t h = 0; h < heads; ++h) {
        const ad::VarId qh = t.slice_cols(q, h * dh, dh);
        const ad::VarId kh = t.slice_cols(k, h * dh, dh);
        const ad::VarId vh = t.slice_cols(v, h * dv, dv);
        const ad::VarId w = t.softmax_rows(t.scale(t.matmul_nt(qh, kh), scale));
        outs.push_back(t.matmul_nn(w, vh));
    }
    return t.concat_cols(outs);
}

} // namespace

ad::VarId cdif_tape_forward(ad::Tape& tape, const CdifParamsD& params,
                            const MatrixD& visual,
                            const std::vector<std::array<double, 3>>& visual_coords,
                            const MatrixD& map_tokens,
                            const std::vector<std::array<double, 3>>& map_coords,
                            CdifTapeBindings* bindings) {
    params.validate();
    if (visual.cols != params.dim_visual || map_tokens.cols != params.dim_map())
        throw ConfigError("cdif tape: input widths do not match params");
    if (visual_coords.size() != visual.rows || map_coords.size() != map_tokens.rows)
        throw ConfigError("cdif tape: coordinate count mismatch");

    ad::VarId vis = tape.input(visual);
    ad::VarId map = tape.input(map_tokens);
    const ad::VarId vis_cmat = tape.input(coord_matrix<double>(visual_coords));
    const ad::VarId map_cmat = tape.input(coord_matrix<double>(map_coords));

    for (std::size_t li = 0; li < params.layers.size(); ++li) {
        const CdifLayerParamsD& layer = params.layers[li];
        const std::string prefix = "layer" + std::to_string(li) + ".";
        const TapeMlp m_mlp = reg_mlp(tape, layer.map_coord_mlp,
                                      prefix + "map_coord_mlp", bindings);
        const TapeMlp v_mlp = reg_mlp(tape, layer.visual_coord_mlp,
                                      prefix + "visual_coord_mlp", bindings);
        const TapeLinear sq = reg_linear(tape, layer.self_q, prefix + "self_q", bindings);
        const TapeLinear sk = reg_linear(tape, layer.self_k, prefix + "self_k", bindings);
        const TapeLinear sv = reg_linear(tape, layer.self_v, prefix + "self_v", bindings);
        const TapeLinear so = reg_linear(tape, layer.self_out, prefix + "self_out", bindings);
        const TapeLinear cq = reg_linear(tape, layer.cross_q, prefix + "cross_q", bindings);
        const TapeLinear ck = reg_linear(tape, layer.cross_k, prefix + "cross_k", bindings);
        const TapeLinear cv = reg_linear(tape, layer.cross_v, prefix + "cross_v", bindings);
        const TapeLinear co = reg_linear(tape, layer.cross_out, prefix + "cross_out", bindings);
        const TapeMlp g_mlp = reg_mlp(tape, layer.gate_mlp, prefix + "gate_mlp", bindings);
        const TapeMlp f_mlp = reg_mlp(tape, layer.ffn, prefix + "ffn", bindings);

        const ad::VarId injected = tape.add(map, tape_mlp(tape, map_cmat, m_mlp));
        const ad::VarId q = tape_rope(tape, tape.linear(injected, sq.w, sq.b),
                                      map_coords, layer.rope);
        const ad::VarId k = tape_rope(tape, tape.linear(injected, sk.w, sk.b),
                                      map_coords, layer.rope);
        const ad::VarId v = tape.linear(map, sv.w, sv.b);
        const ad::VarId attn = tape_mha(tape, q, k, v, layer.heads);
        const ad::VarId reasoned = tape.linear(attn, so.w, so.b);
        map = layer.map_residual ? tape.add(map, reasoned) : reasoned;

        const ad::VarId f_inj = tape.add(vis, tape_mlp(tape, vis_cmat, v_mlp));
        const ad::VarId q2 = tape_rope(tape, tape.linear(f_inj, cq.w, cq.b),
                                       visual_coords, layer.rope);
        const ad::VarId k2 = tape_rope(tape, tape.linear(map, ck.w, ck.b),
                                       map_coords, layer.rope);
        const ad::VarId v2 = tape.linear(map, cv.w, cv.b);
        const ad::VarId attn2 = tape_mha(tape, q2, k2, v2, layer.heads);
        const ad::VarId fused = tape.linear(attn2, co.w, co.b);

        const ad::VarId gate = tape.sigmoid(tape_mlp(tape, vis, g_mlp));
        vis = tape.add(vis, tape.hadamard(gate, tape_mlp(tape, fused, f_mlp)));
    }
    return vis;
}

template Mat<float> rope3d_apply(const Mat<float>&,
                                 const std::vector<std::array<double, 3>>&,
                                 const Rope3dConfig&);
template Mat<double> rope3d_apply(const Mat<double>&,
                                  const std::vector<std::array<double, 3>>&,
                                  const Rope3dConfig&);
template struct CdifParamsT<float>;
template struct CdifParamsT<double>;
template Mat<float> map_reasoning(const Mat<float>&,
                                  const std::vector<std::array<double, 3>>&,
                                  const CdifLayerParamsT<float>&);
template Mat<double> map_reasoning(const Mat<double>&,
                                   const std::vector<std::array<double, 3>>&,
                                   const CdifLayerParamsT<double>&);
template Mat<float> map_reading(const Mat<float>&,
                                const std::vector<std::array<double, 3>>&,
                                const Mat<float>&,
                                const std::vector<std::array<double, 3>>&,
                                const CdifLayerParamsT<float>&, Mat<float>*);
template Mat<double> map_reading(const Mat<double>&,
                                 const std::vector<std::array<double, 3>>&,
                                 const Mat<double>&,
                                 const std::vector<std::array<double, 3>>&,
                                 const CdifLayerParamsT<double>&, Mat<double>*);
template Mat<float> gated_update(const Mat<float>&, const Mat<float>&,
                                 const CdifLayerParamsT<float>&);
template Mat<double> gated_update(const Mat<double>&, const Mat<double>&,
                                  const CdifLayerParamsT<double>&);
template Mat<float>& cdif_forward(FusionStateT<float>&, const CdifParamsT<float>&);
template Mat<double>& cdif_forward(FusionStateT<double>&, const CdifParamsT<double>&);
template FusionStateT<float> make_fusion_state(const FrameBundle&,
                                               const CognitiveMap&,
                                               const CdifParamsT<float>&);
template FusionStateT<double> make_fusion_state(const FrameBundle&,
                                                const CognitiveMap&,
                                                const CdifParamsT<double>&);
template CdifParamsT<float> make_zero_cdif_params(std::uint32_t, std::uint32_t,
                                                  std::uint32_t, std::uint32_t);
template CdifParamsT<double> make_zero_cdif_params(std::uint32_t, std::uint32_t,
                                                   std::uint32_t, std::uint32_t);
template CdifParamsT<float> make_random_cdif_params(std::uint32_t, std::uint32_t,
                                                    std::uint32_t, std::uint32_t,
                                                    std::uint64_t);
template CdifParamsT<double> make_random_cdif_params(std::uint32_t, std::uint32_t,
                                                     std::uint32_t, std::uint32_t,
                                                     std::uint64_t);

} // namespace cogmap
