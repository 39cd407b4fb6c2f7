#pragma once

#include <cstddef>
#include <vector>

#include "cogmap/error.hpp"

namespace cogmap {

// Dense row-major matrix. Storage precision is the template parameter; every
// reduction (dot products, softmax sums, means) accumulates in double with a
// fixed left-to-right order over ascending indices, so results are
// bit-identical across runs regardless of storage type.
template <typename S>
struct Mat {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<S> data; // rows * cols, row-major

    Mat() = default;
    Mat(std::size_t r, std::size_t c, S fill = S(0))
        : rows(r), cols(c), data(r * c, fill) {}

    S* row(std::size_t i) { return data.data() + i * cols; }
    const S* row(std::size_t i) const { return data.data() + i * cols; }

    S& at(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    S at(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

    bool same_shape(const Mat& o) const {
        return rows == o.rows && cols == o.cols;
    }
};

using Matrix = Mat<float>;   // inference storage
using MatrixD = Mat<double>; // verification mode

// weight is (out x in); bias has length out.
template <typename S>
struct LinearParamsT {
    Mat<S> weight;
    std::vector<S> bias;

    std::size_t in_dim() const { return weight.cols; }
    std::size_t out_dim() const { return weight.rows; }
};

// Two-layer MLP with an exact (erf-based) GELU between the layers.
template <typename S>
struct MlpParamsT {
    LinearParamsT<S> layer1;
    LinearParamsT<S> layer2;
};

using LinearParams = LinearParamsT<float>;
using MlpParams = MlpParamsT<float>;
using LinearParamsD = LinearParamsT<double>;
using MlpParamsD = MlpParamsT<double>;

double gelu(double x);        // 0.5 x (1 + erf(x / sqrt 2))
double gelu_derivative(double x);
double sigmoid(double x);

// y[i] = weight . x[i] + bias for every row i of x.
template <typename S>
Mat<S> linear(const Mat<S>& x, const LinearParamsT<S>& p);

// layer2(GELU(layer1(x)))
template <typename S>
Mat<S> mlp(const Mat<S>& x, const MlpParamsT<S>& p);

// Row-wise softmax with per-row max subtraction. Rows sum to 1.
template <typename S>
Mat<S> softmax_rows(const Mat<S>& m);

// Scaled dot-product attention, heads concatenated in order. q and k must
// share a column count divisible by `heads`; v.cols must also divide by
// `heads` (and may differ from q.cols). If attn_weights is non-null it
// receives the softmaxed scores with layout (heads * q.rows) x k.rows,
// row (h * q.rows + i) holding head h / query i.
template <typename S>
Mat<S> multihead_attention(const Mat<S>& q, const Mat<S>& k, const Mat<S>& v,
                           std::size_t heads, Mat<S>* attn_weights = nullptr);

// Elementwise helpers used by the fusion stack.
template <typename S>
Mat<S> add(const Mat<S>& a, const Mat<S>& b);
template <typename S>
Mat<S> hadamard(const Mat<S>& a, const Mat<S>& b);
template <typename S>
Mat<S> sigmoid_map(const Mat<S>& x);

} // namespace cogmap
