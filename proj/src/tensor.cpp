#include "cogmap/tensor.hpp"

#include <cmath>
#include <string>

namespace cogmap {

namespace {

void check(bool ok, const std::string& what) {
    if (!ok)
        throw ContractError(what);
}

} // namespace

double gelu(double x) {
    return 0.5 * x * (1.0 + std::erf(x * 0.70710678118654752440));
}

double gelu_derivative(double x) {
    const double cdf = 0.5 * (1.0 + std::erf(x * 0.70710678118654752440));
    const double pdf = std::exp(-0.5 * x * x) * 0.39894228040143267794; // 1/sqrt(2 pi)
    return cdf + x * pdf;
}

double sigmoid(double x) {
    if (x >= 0.0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

template <typename S>
Mat<S> linear(const Mat<S>& x, const LinearParamsT<S>& p) {
    check(x.cols == p.weight.cols,
          "linear: input has " + std::to_string(x.cols) +
              " columns, weight expects " + std::to_string(p.weight.cols));
    check(p.bias.size() == p.weight.rows, "linear: bias length != weight rows");
    const std::size_t out = p.weight.rows;
    Mat<S> y(x.rows, out);
    for (std::size_t i = 0; i < x.rows; ++i) {
        const S* xi = x.row(i);
        for (std::size_t o = 0; o < out; ++o) {
            const S* w = p.weight.row(o);
            double acc = static_cast<double>(p.bias[o]);
            for (std::size_t k = 0; k < x.cols; ++k)
                acc += static_cast<double>(w[k]) * static_cast<double>(xi[k]);
            y.at(i, o) = static_cast<S>(acc);
        }
    }
    return y;
}

template <typename S>
Mat<S> mlp(const Mat<S>& x, const MlpParamsT<S>& p) {
    check(p.layer1.out_dim() == p.layer2.in_dim(),
          "mlp: layer1 output dim != layer2 input dim");
    Mat<S> h = linear(x, p.layer1);
    for (S& v : h.data)
        v = static_cast<S>(gelu(static_cast<double>(v)));
    return linear(h, p.layer2);
}

template <typename S>
Mat<S> softmax_rows(const Mat<S>& m) {
    Mat<S> y(m.rows, m.cols);
    for (std::size_t i = 0; i < m.rows; ++i) {
        const S* src = m.row(i);
        S* dst = y.row(i);
        if (m.cols == 0)
            continue;
        double mx = static_cast<double>(src[0]);
        for (std::size_t j = 1; j < m.cols; ++j)
            mx = std::max(mx, static_cast<double>(src[j]));
        double sum = 0.0;
        for (std::size_t j = 0; j < m.cols; ++j)
            sum += std::exp(static_cast<double>(src[j]) - mx);
        for (std::size_t j = 0; j < m.cols; ++j)
            dst[j] = static_cast<S>(std::exp(static_cast<double>(src[j]) - mx) / sum);
    }
    return y;
}

template <typename S>
Mat<S> multihead_attention(const Mat<S>& q, const Mat<S>& k, const Mat<S>& v,
                           std::size_t heads, Mat<S>* attn_weights) {
    check(heads >= 1, "attention: heads must be >= 1");
    check(q.cols == k.cols, "attention: query/key dimension mismatch");
    if (q.cols % heads != 0)
        throw ConfigError("attention: model dim " + std::to_string(q.cols) +
                          " not divisible by " + std::to_string(heads) + " heads");
    if (v.cols % heads != 0)
        throw ConfigError("attention: value dim " + std::to_string(v.cols) +
                          " not divisible by " + std::to_string(heads) + " heads");
    check(k.rows == v.rows, "attention: key/value row count mismatch");
    if (k.rows == 0)
        throw ContractError("attention: empty key set");

    const std::size_t dh = q.cols / heads;
    const std::size_t dv = v.cols / heads;
    const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
    Mat<S> out(q.rows, v.cols);
    if (attn_weights)
        *attn_weights = Mat<S>(heads * q.rows, k.rows);

    std::vector<double> logits(k.rows);
    std::vector<double> weights(k.rows);
    for (std::size_t h = 0; h < heads; ++h) {
        const std::size_t qoff = h * dh;
        const std::size_t voff = h * dv;
        for (std::size_t i = 0; i < q.rows; ++i) {
            const S* qi = q.row(i) + qoff;
            for (std::size_t j = 0; j < k.rows; ++j) {
                const S* kj = k.row(j) + qoff;
                double acc = 0.0;
                for (std::size_t c = 0; c < dh; ++c)
                    acc += static_cast<double>(qi[c]) * static_cast<double>(kj[c]);
                logits[j] = acc * scale;
            }
            double mx = logits[0];
            for (std::size_t j = 1; j < k.rows; ++j)
                mx = std::max(mx, logits[j]);
            double sum = 0.0;
            for (std::size_t j = 0; j < k.rows; ++j)
                sum += std::exp(logits[j] - mx);
            for (std::size_t j = 0; j < k.rows; ++j)
                weights[j] = std::exp(logits[j] - mx) / sum;
            if (attn_weights) {
                S* wrow = attn_weights->row(h * q.rows + i);
                for (std::size_t j = 0; j < k.rows; ++j)
                    wrow[j] = static_cast<S>(weights[j]);
            }
            S* oi = out.row(i) + voff;
            for (std::size_t c = 0; c < dv; ++c) {
                double acc = 0.0;
                for (std::size_t j = 0; j < k.rows; ++j)
                    acc += weights[j] * static_cast<double>(v.at(j, voff + c));
                oi[c] = static_cast<S>(acc);
            }
        }
    }
    return out;
}

template <typename S>
Mat<S> add(const Mat<S>& a, const Mat<S>& b) {
    check(a.same_shape(b), "add: shape mismatch");
    Mat<S> y(a.rows, a.cols);
    for (std::size_t i = 0; i < a.data.size(); ++i)
        y.data[i] = a.data[i] + b.data[i];
    return y;
}

template <typename S>
Mat<S> hadamard(const Mat<S>& a, const Mat<S>& b) {
    check(a.same_shape(b), "hadamard: shape mismatch");
    Mat<S> y(a.rows, a.cols);
    for (std::size_t i = 0; i < a.data.size(); ++i)
        y.data[i] = a.data[i] * b.data[i];
    return y;
}

template <typename S>
Mat<S> sigmoid_map(const Mat<S>& x) {
    Mat<S> y(x.rows, x.cols);
    for (std::size_t i = 0; i < x.data.size(); ++i)
        y.data[i] = static_cast<S>(sigmoid(static_cast<double>(x.data[i])));
    return y;
}

template Mat<float> linear(const Mat<float>&, const LinearParamsT<float>&);
template Mat<double> linear(const Mat<double>&, const LinearParamsT<double>&);
template Mat<float> mlp(const Mat<float>&, const MlpParamsT<float>&);
template Mat<double> mlp(const Mat<double>&, const MlpParamsT<double>&);
template Mat<float> softmax_rows(const Mat<float>&);
template Mat<double> softmax_rows(const Mat<double>&);
template Mat<float> multihead_attention(const Mat<float>&, const Mat<float>&,
                                        const Mat<float>&, std::size_t, Mat<float>*);
template Mat<double> multihead_attention(const Mat<double>&, const Mat<double>&,
                                         const Mat<double>&, std::size_t, Mat<double>*);
template Mat<float> add(const Mat<float>&, const Mat<float>&);
template Mat<double> add(const Mat<double>&, const Mat<double>&);
template Mat<float> hadamard(const Mat<float>&, const Mat<float>&);
template Mat<double> hadamard(const Mat<double>&, const Mat<double>&);
template Mat<float> sigmoid_map(const Mat<float>&);
template Mat<double> sigmoid_map(const Mat<double>&);

} // namespace cogmap
