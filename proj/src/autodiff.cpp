#include "cogmap/autodiff.hpp"

#include <cmath>
#include <utility>

namespace cogmap::ad {

namespace {

void check(bool ok, const char* what) {
    if (!ok)
        throw ContractError(what);
}

void accumulate(MatrixD& dst, const MatrixD& src) {
    for (std::size_t i = 0; i < dst.data.size(); ++i)
        dst.data[i] += src.data[i];
}

} // namespace

VarId Tape::push(MatrixD value, std::function<void(Tape&)> back, bool is_param) {
    Node n;
    n.grad = MatrixD(value.rows, value.cols);
    n.value = std::move(value);
    n.back = std::move(back);
    n.is_param = is_param;
    nodes_.push_back(std::move(n));
    return static_cast<VarId>(nodes_.size() - 1);
}

VarId Tape::input(MatrixD v) { return push(std::move(v), {}, false); }

VarId Tape::param(MatrixD v) { return push(std::move(v), {}, true); }

VarId Tape::linear(VarId x, VarId w, VarId b) {
    const MatrixD& xv = value(x);
    const MatrixD& wv = value(w);
    const MatrixD& bv = value(b);
    check(bv.rows == 1 && bv.cols == wv.rows, "tape linear: bias shape");
    LinearParamsD p;
    p.weight = wv;
    p.bias = bv.data;
    MatrixD y = cogmap::linear(xv, p);
    VarId out = push(std::move(y), {});
    nodes_[out].back = [x, w, b, out](Tape& t) {
        const MatrixD& dy = t.grad(out);
        const MatrixD& xv = t.value(x);
        const MatrixD& wv = t.value(w);
        // dX += dY W
        MatrixD& dx = t.grad_ref(x);
        for (std::size_t i = 0; i < xv.rows; ++i)
            for (std::size_t kk = 0; kk < xv.cols; ++kk) {
                double acc = 0.0;
                for (std::size_t o = 0; o < wv.rows; ++o)
                    acc += dy.at(i, o) * wv.at(o, kk);
                dx.at(i, kk) += acc;
            }
        // dW += dY^T X
        MatrixD& dw = t.grad_ref(w);
        for (std::size_t o = 0; o < wv.rows; ++o)
            for (std::size_t kk = 0; kk < wv.cols; ++kk) {
                double acc = 0.0;
                for (std::size_t i = 0; i < xv.rows; ++i)
                    acc += dy.at(i, o) * xv.at(i, kk);
                dw.at(o, kk) += acc;
            }
        // db += column sums of dY
        MatrixD& db = t.grad_ref(b);
        for (std::size_t o = 0; o < wv.rows; ++o) {
            double acc = 0.0;
            for (std::size_t i = 0; i < xv.rows; ++i)
                acc += dy.at(i, o);
            db.at(0, o) += acc;
        }
    };
    return out;
}

VarId Tape::gelu(VarId x) {
    const MatrixD& xv = value(x);
    MatrixD y(xv.rows, xv.cols);
    for (std::size_t i = 0; i < xv.data.size(); ++i)
        y.data[i] = cogmap::gelu(xv.data[i]);
    VarId out = push(std::move(y), {});
    nodes_[out].back = [x, out](Tape& t) {
        const MatrixD& dy = t.grad(out);
        const MatrixD& xv = t.value(x);
        MatrixD& dx = t.grad_ref(x);
        for (std::size_t i = 0; i < xv.data.size(); ++i)
            dx.data[i] += dy.data[i] * gelu_derivative(xv.data[i]);
    };
    return out;
}

VarId Tape::sigmoid(VarId x) {
    const MatrixD& xv = value(x);
    MatrixD y(xv.rows, xv.cols);
    for (std::size_t i = 0; i < xv.data.size(); ++i)
        y.data[i] = cogmap::sigmoid(xv.data[i]);
    VarId out = push(std::move(y), {});
    nodes_[out].back = [x, out](Tape& t) {
        const MatrixD& dy = t.grad(out);
        const MatrixD& yv = t.value(out);
        MatrixD& dx = t.grad_ref(x);
        for (std::size_t i = 0; i < yv.data.size(); ++i)
            dx.data[i] += dy.data[i] * yv.data[i] * (1.0 - yv.data[i]);
    };
    return out;
}

VarId Tape::add(VarId a, VarId b) {
    MatrixD y = cogmap::add(value(a), value(b));
    VarId out = push(std::move(y), {});
    nodes_[out].back = [a, b, out](Tape& t) {
        accumulate(t.grad_ref(a), t.grad(out));
        accumulate(t.grad_ref(b), t.grad(out));
    };
    return out;
}

VarId Tape::hadamard(VarId a, VarId b) {
    MatrixD y = cogmap::hadamard(value(a), value(b));
    VarId out = push(std::move(y), {});
    nodes_[out].back = [a, b, out](Tape& t) {
        const MatrixD& dy = t.grad(out);
        const MatrixD& av = t.value(a);
        const MatrixD& bv = t.value(b);
        MatrixD& da = t.grad_ref(a);
        MatrixD& db = t.grad_ref(b);
        for (std::size_t i = 0; i < dy.data.size(); ++i) {
            da.data[i] += dy.data[i] * bv.data[i];
            db.data[i] += dy.data[i] * av.data[i];
        }
    };
    return out;
}

VarId Tape::scale(VarId a, double c) {
    const MatrixD& av = value(a);
    MatrixD y(av.rows, av.cols);
    for (std::size_t i = 0; i < av.data.size(); ++i)
        y.data[i] = av.data[i] * c;
    VarId out = push(std::move(y), {});
    nodes_[out].back = [a, c, out](Tape& t) {
        const MatrixD& dy = t.grad(out);
        MatrixD& da = t.grad_ref(a);
        for (std::size_t i = 0; i < dy.data.size(); ++i)
            da.data[i] += dy.data[i] * c;
    };
    return out;
}

VarId Tape::matmul_nt(VarId a, VarId b) {
    const MatrixD& av = value(a);
    const MatrixD& bv = value(b);
    check(av.cols == bv.cols, "tape matmul_nt: inner dim mismatch");
    MatrixD y(av.rows, bv.rows);
    for (std::size_t i = 0; i < av.rows; ++i)
        for (std::size_t j = 0; j < bv.rows; ++j) {
            double acc = 0.0;
            for (std::size_t kk = 0; kk < av.cols; ++kk)
                acc += av.at(i, kk) * bv.at(j, kk);
            y.at(i, j) = acc;
        }
    VarId out = push(std::move(y), {});
    nodes_[out].back = [a, b, out](Tape& t) {
        const MatrixD& dy = t.grad(out);
        const MatrixD& av = t.value(a);
        const MatrixD& bv = t.value(b);
        MatrixD& da = t.grad_ref(a);
        MatrixD& db = t.grad_ref(b);
        // dA += dY B ; dB += dY^T A
        for (std::size_t i = 0; i < av.rows; ++i)
            for (std::size_t kk = 0; kk < av.cols; ++kk) {
                double acc = 0.0;
                for (std::size_t j = 0; j < bv.rows; ++j)
                    acc += dy.at(i, j) * bv.at(j, kk);
                da.at(i, kk) += acc;
            }
        for (std::size_t j = 0; j < bv.rows; ++j)
            for (std::size_t kk = 0; kk < bv.cols; ++kk) {
                double acc = 0.0;
                for (std::size_t i = 0; i < av.rows; ++i)
                    acc += dy.at(i, j) * av.at(i, kk);
                db.at(j, kk) += acc;
            }
    };
    return out;
}

VarId Tape::matmul_nn(VarId a, VarId b) {
    const MatrixD& av = value(a);
    const MatrixD& bv = value(b);
    check(av.cols == bv.rows, "tape matmul_nn: inner dim mismatch");
    MatrixD y(av.rows, bv.cols);
    for (std::size_t i = 0; i < av.rows; ++i)
        for (std::size_t j = 0; j < bv.cols; ++j) {
            double acc = 0.0;
            for (std::size_t kk = 0; kk < av.cols; ++kk)
                acc += av.at(i, kk) * bv.at(kk, j);
            y.at(i, j) = acc;
        }
    VarId out = push(std::move(y), {});
    nodes_[out].back = [a, b, out](Tape& t) {
        const MatrixD& dy = t.grad(out);
        const MatrixD& av = t.value(a);
        const MatrixD& bv = t.value(b);
        MatrixD& da = t.grad_ref(a);
        MatrixD& db = t.grad_ref(b);
        // dA += dY B^T ; dB += A^T dY
        for (std::size_t i = 0; i < av.rows; ++i)
            for (std::size_t kk = 0; kk < av.cols; ++kk) {
                double acc = 0.0;
                for (std::size_t j = 0; j < bv.cols; ++j)
                    acc += dy.at(i, j) * bv.at(kk, j);
                da.at(i, kk) += acc;
            }
        for (std::size_t kk = 0; kk < bv.rows; ++kk)
            for (std::size_t j = 0; j < bv.cols; ++j) {
                double acc = 0.0;
                for (std::size_t i = 0; i < av.rows; ++i)
                    acc += av.at(i, kk) * dy.at(i, j);
                db.at(kk, j) += acc;
            }
    };
    return out;
}

VarId Tape::softmax_rows(VarId x) {
    MatrixD y = cogmap::softmax_rows(value(x));
    VarId out = push(std::move(y), {});
    nodes_[out].back = [x, out](Tape& t) {
        const MatrixD& dy = t.grad(out);
        const MatrixD& yv = t.value(out);
        MatrixD& dx = t.grad_ref(x);
        for (std::size_t i = 0; i < yv.rows; ++i) {
            double dot = 0.0;
            for (std::size_t j = 0; j < yv.cols; ++j)
                dot += dy.at(i, j) * yv.at(i, j);
            for (std::size_t j = 0; j < yv.cols; ++j)
                dx.at(i, j) += (dy.at(i, j) - dot) * yv.at(i, j);
        }
    };
    return out;
}

VarId Tape::slice_cols(VarId x, std::size_t first, std::size_t count) {
    const MatrixD& xv = value(x);
    check(first + count <= xv.cols, "tape slice_cols: out of range");
    MatrixD y(xv.rows, count);
    for (std::size_t i = 0; i < xv.rows; ++i)
        for (std::size_t j = 0; j < count; ++j)
            y.at(i, j) = xv.at(i, first + j);
    VarId out = push(std::move(y), {});
    nodes_[out].back = [x, first, count, out](Tape& t) {
        const MatrixD& dy = t.grad(out);
        MatrixD& dx = t.grad_ref(x);
        for (std::size_t i = 0; i < dy.rows; ++i)
            for (std::size_t j = 0; j < count; ++j)
                dx.at(i, first + j) += dy.at(i, j);
    };
    return out;
}

VarId Tape::concat_cols(const std::vector<VarId>& parts) {
    check(!parts.empty(), "tape concat_cols: empty part list");
    const std::size_t rows = value(parts[0]).rows;
    std::size_t cols = 0;
    for (VarId p : parts) {
        check(value(p).rows == rows, "tape concat_cols: row mismatch");
        cols += value(p).cols;
    }
    MatrixD y(rows, cols);
    std::size_t off = 0;
    for (VarId p : parts) {
        const MatrixD& pv = value(p);
        for (std::size_t i = 0; i < rows; ++i)
            for (std::size_t j = 0; j < pv.cols; ++j)
                y.at(i, off + j) = pv.at(i, j);
        off += pv.cols;
    }
    std::vector<VarId> captured = parts;
    VarId out = push(std::move(y), {});
    nodes_[out].back = [captured, out](Tape& t) {
        const MatrixD& dy = t.grad(out);
        std::size_t off = 0;
        for (VarId p : captured) {
            MatrixD& dp = t.grad_ref(p);
            for (std::size_t i = 0; i < dp.rows; ++i)
                for (std::size_t j = 0; j < dp.cols; ++j)
                    dp.at(i, j) += dy.at(i, off + j);
            off += dp.cols;
        }
    };
    return out;
}

VarId Tape::sum(VarId x) {
    const MatrixD& xv = value(x);
    double acc = 0.0;
    for (double v : xv.data)
        acc += v;
    MatrixD y(1, 1);
    y.at(0, 0) = acc;
    VarId out = push(std::move(y), {});
    nodes_[out].back = [x, out](Tape& t) {
        const double d = t.grad(out).at(0, 0);
        MatrixD& dx = t.grad_ref(x);
        for (double& g : dx.data)
            g += d;
    };
    return out;
}

VarId Tape::sum_squares(VarId x) {
    const MatrixD& xv = value(x);
    double acc = 0.0;
    for (double v : xv.data)
        acc += v * v;
    MatrixD y(1, 1);
    y.at(0, 0) = acc;
    VarId out = push(std::move(y), {});
    nodes_[out].back = [x, out](Tape& t) {
        const double d = t.grad(out).at(0, 0);
        const MatrixD& xv = t.value(x);
        MatrixD& dx = t.grad_ref(x);
        for (std::size_t i = 0; i < xv.data.size(); ++i)
            dx.data[i] += d * 2.0 * xv.data[i];
    };
    return out;
}

VarId Tape::linear_map(VarId x,
                       std::function<MatrixD(const MatrixD&)> apply,
                       std::function<MatrixD(const MatrixD&)> adjoint) {
    MatrixD y = apply(value(x));
    VarId out = push(std::move(y), {});
    nodes_[out].back = [x, out, adj = std::move(adjoint)](Tape& t) {
        MatrixD back = adj(t.grad(out));
        accumulate(t.grad_ref(x), back);
    };
    return out;
}

void Tape::backward(VarId loss) {
    check(loss >= 0 && loss < static_cast<VarId>(nodes_.size()),
          "tape backward: bad loss id");
    const MatrixD& lv = nodes_[loss].value;
    check(lv.rows == 1 && lv.cols == 1, "tape backward: loss must be scalar");
    for (Node& n : nodes_)
        for (double& g : n.grad.data)
            g = 0.0;
    nodes_[loss].grad.at(0, 0) = 1.0;
    for (VarId id = static_cast<VarId>(nodes_.size()) - 1; id >= 0; --id) {
        if (nodes_[id].back)
            nodes_[id].back(*this);
    }
}

} // namespace cogmap::ad
