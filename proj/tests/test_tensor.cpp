#include "doctest.h"

#include <cmath>

#include "cogmap/tensor.hpp"

using namespace cogmap;

namespace {

MatrixD fill_normalish(std::size_t r, std::size_t c, double start) {
    MatrixD m(r, c);
    double v = start;
    for (double& x : m.data) {
        x = std::sin(v) * 1.3;
        v += 0.7;
    }
    return m;
}

} // namespace

TEST_SUITE("tensor") {

TEST_CASE("gelu reference values") {
    CHECK(gelu(0.0) == 0.0);
    CHECK(gelu(1.0) == doctest::Approx(0.8413447460685429).epsilon(1e-12));
    CHECK(gelu(-1.0) == doctest::Approx(-0.15865525393145705).epsilon(1e-12));
    CHECK(gelu(10.0) == doctest::Approx(10.0).epsilon(1e-12));
    CHECK(gelu(-10.0) == doctest::Approx(0.0).epsilon(1e-7));
}

TEST_CASE("gelu derivative matches finite differences") {
    const double h = 1e-6;
    for (double x : {-3.0, -1.0, -0.1, 0.0, 0.5, 2.0, 4.0}) {
        const double fd = (gelu(x + h) - gelu(x - h)) / (2.0 * h);
        CHECK(gelu_derivative(x) == doctest::Approx(fd).epsilon(1e-6));
    }
}

TEST_CASE("sigmoid saturates without overflow") {
    CHECK(sigmoid(0.0) == 0.5);
    CHECK(sigmoid(1e4) == 1.0);
    CHECK(sigmoid(-1e4) == 0.0);
    CHECK(sigmoid(3.0) > sigmoid(2.0));
    CHECK(std::isfinite(sigmoid(-745.0)));
}

TEST_CASE("linear small known case") {
    LinearParamsD p;
    p.weight = MatrixD(2, 2);
    p.weight.data = {1.0, 2.0, 3.0, 4.0};
    p.bias = {0.5, -0.5};
    MatrixD x(1, 2);
    x.data = {1.0, 1.0};
    const MatrixD y = linear(x, p);
    REQUIRE(y.rows == 1);
    REQUIRE(y.cols == 2);
    CHECK(y.at(0, 0) == 3.5);
    CHECK(y.at(0, 1) == 6.5);
}

TEST_CASE("linear rejects width mismatch") {
    LinearParamsD p;
    p.weight = MatrixD(2, 3);
    p.bias = {0.0, 0.0};
    MatrixD x(1, 2);
    CHECK_THROWS_AS(linear(x, p), ContractError);
}

TEST_CASE("softmax rows sum to one and survive huge logits") {
    MatrixD m(2, 3);
    m.data = {1e4, 0.0, -1e4, 5.0, 5.0, 5.0};
    const MatrixD s = softmax_rows(m);
    for (std::size_t i = 0; i < 2; ++i) {
        double sum = 0.0;
        for (std::size_t j = 0; j < 3; ++j) {
            CHECK(std::isfinite(s.at(i, j)));
            sum += s.at(i, j);
        }
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    }
    CHECK(s.at(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(s.at(1, 0) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("attention with one key copies the value row exactly") {
    const MatrixD q = fill_normalish(3, 4, 0.0);
    const MatrixD k = fill_normalish(1, 4, 1.0);
    const MatrixD v = fill_normalish(1, 4, 2.0);
    const MatrixD out = multihead_attention(q, k, v, 2);
    REQUIRE(out.rows == 3);
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 4; ++j)
            CHECK(out.at(i, j) == v.at(0, j)); // softmax over one key is exactly 1
}

TEST_CASE("attention weight rows sum to one") {
    const MatrixD q = fill_normalish(3, 6, 0.3);
    const MatrixD k = fill_normalish(5, 6, 1.1);
    const MatrixD v = fill_normalish(5, 6, 2.2);
    MatrixD w;
    multihead_attention(q, k, v, 3, &w);
    REQUIRE(w.rows == 3 * 3);
    REQUIRE(w.cols == 5);
    for (std::size_t i = 0; i < w.rows; ++i) {
        double sum = 0.0;
        for (std::size_t j = 0; j < w.cols; ++j)
            sum += w.at(i, j);
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("multihead equals per-head single attention") {
    const std::size_t dh = 3;
    const MatrixD q = fill_normalish(4, 2 * dh, 0.2);
    const MatrixD k = fill_normalish(6, 2 * dh, 1.4);
    const MatrixD v = fill_normalish(6, 2 * dh, 2.6);
    const MatrixD full = multihead_attention(q, k, v, 2);
    for (int h = 0; h < 2; ++h) {
        MatrixD qh(4, dh), kh(6, dh), vh(6, dh);
        for (std::size_t i = 0; i < 4; ++i)
            for (std::size_t j = 0; j < dh; ++j)
                qh.at(i, j) = q.at(i, h * dh + j);
        for (std::size_t i = 0; i < 6; ++i)
            for (std::size_t j = 0; j < dh; ++j) {
                kh.at(i, j) = k.at(i, h * dh + j);
                vh.at(i, j) = v.at(i, h * dh + j);
            }
        const MatrixD single = multihead_attention(qh, kh, vh, 1);
        for (std::size_t i = 0; i < 4; ++i)
            for (std::size_t j = 0; j < dh; ++j)
                CHECK(full.at(i, h * dh + j) ==
                      doctest::Approx(single.at(i, j)).epsilon(1e-14));
    }
}

TEST_CASE("attention contract errors") {
    const MatrixD q = fill_normalish(2, 6, 0.0);
    const MatrixD k = fill_normalish(3, 6, 1.0);
    const MatrixD v = fill_normalish(3, 6, 2.0);
    CHECK_THROWS_AS(multihead_attention(q, k, v, 4), ConfigError);
    const MatrixD empty_k(0, 6), empty_v(0, 6);
    CHECK_THROWS_AS(multihead_attention(q, empty_k, empty_v, 2), ContractError);
}

TEST_CASE("mlp composes the two layers") {
    MlpParamsD p;
    p.layer1.weight = MatrixD(2, 1);
    p.layer1.weight.data = {1.0, -1.0};
    p.layer1.bias = {0.0, 0.0};
    p.layer2.weight = MatrixD(1, 2);
    p.layer2.weight.data = {1.0, 1.0};
    p.layer2.bias = {0.25};
    MatrixD x(1, 1);
    x.data = {2.0};
    const MatrixD y = mlp(x, p);
    const double want = gelu(2.0) + gelu(-2.0) + 0.25;
    CHECK(y.at(0, 0) == doctest::Approx(want).epsilon(1e-14));
}

TEST_CASE("float and double storage agree through the double accumulator") {
    LinearParams pf;
    pf.weight = Matrix(2, 2);
    pf.weight.data = {0.5f, -0.25f, 1.5f, 0.125f};
    pf.bias = {0.75f, -1.0f};
    Matrix xf(1, 2);
    xf.data = {0.5f, 2.0f};
    const Matrix yf = linear(xf, pf);
    // Exactly representable inputs: the float path must be exact too.
    CHECK(yf.at(0, 0) == 0.5f);
    CHECK(yf.at(0, 1) == 0.0f);
}

} // TEST_SUITE
