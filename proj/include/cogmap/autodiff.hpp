#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "cogmap/tensor.hpp"

namespace cogmap::ad {

using VarId = int;

// Reverse-mode tape over double-precision matrices. Covers exactly the
// operation set the fusion stack needs; values are computed with the same
// kernels as the plain forward path, so tape forwards match plain forwards
// bit for bit where the composition is identical.
//
// Gradients are keyed by node identity: param() returns the VarId under
// which grad() can be queried after backward(). Parameters never touched by
// the loss keep an all-zero gradient of matching shape.
class Tape {
public:
    VarId input(MatrixD v);
    VarId param(MatrixD v);

    VarId linear(VarId x, VarId w, VarId b); // w: out x in, b: 1 x out
    VarId gelu(VarId x);
    VarId sigmoid(VarId x);
    VarId add(VarId a, VarId b);
    VarId hadamard(VarId a, VarId b);
    VarId scale(VarId a, double c);
    VarId matmul_nt(VarId a, VarId b); // a * b^T
    VarId matmul_nn(VarId a, VarId b); // a * b
    VarId softmax_rows(VarId x);
    VarId slice_cols(VarId x, std::size_t first, std::size_t count);
    VarId concat_cols(const std::vector<VarId>& parts);
    VarId sum(VarId x);         // 1x1
    VarId sum_squares(VarId x); // 1x1

    // Arbitrary linear map y = F(x) with adjoint dF: grad_x += adjoint(grad_y).
    // Used for rotary embeddings, where the adjoint is the inverse rotation.
    VarId linear_map(VarId x,
                     std::function<MatrixD(const MatrixD&)> apply,
                     std::function<MatrixD(const MatrixD&)> adjoint);

    // Seeds d(loss)/d(loss) = 1 and sweeps the tape in reverse creation
    // order. loss must be 1x1.
    void backward(VarId loss);

    const MatrixD& value(VarId id) const { return nodes_[id].value; }
    const MatrixD& grad(VarId id) const { return nodes_[id].grad; }
    bool is_param(VarId id) const { return nodes_[id].is_param; }

private:
    struct Node {
        MatrixD value;
        MatrixD grad;
        std::function<void(Tape&)> back; // empty for leaves
        bool is_param = false;
    };

    VarId push(MatrixD value, std::function<void(Tape&)> back, bool is_param = false);
    MatrixD& grad_ref(VarId id) { return nodes_[id].grad; }

    std::vector<Node> nodes_;
};

} // namespace cogmap::ad
