#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <vector>

#include "cdb/nn/adam.hpp"
#include "cdb/nn/layers.hpp"
#include "cdb/nn/tensor.hpp"
#include "cdb/simd/kernels.hpp"

using namespace cdb::nn;

namespace {

// Scalar loss L = sum_i c_i * y_i with fixed random weights c; backward is
// fed dy = c, so parameter/input gradients can be checked against central
// finite differences of L.
struct FdHarness {
    std::vector<float> coeff;

    double loss(Layer& layer, const float* x, int batch) {
        const float* y = layer.forward(x, batch);
        double s = 0.0;
        for (std::size_t i = 0; i < coeff.size(); ++i) s += coeff[i] * static_cast<double>(y[i]);
        return s;
    }
};

void check_close(double got, double want, double tol) {
    CHECK(std::abs(got - want) <= tol * (1.0 + std::max(std::abs(got), std::abs(want))));
}

void fd_check(Layer& layer, std::vector<float> x, int batch, std::uint64_t seed) {
    const std::size_t out_n = layer.output_size() * batch;
    FdHarness h;
    std::uint64_t rng = seed;
    h.coeff.resize(out_n);
    for (auto& c : h.coeff) c = randn(rng);

    layer.zero_grad();
    h.loss(layer, x.data(), batch);
    const float* dx = layer.backward(h.coeff.data(), batch);
    std::vector<float> dx_got(dx, dx + x.size());

    const float eps = 1e-2f;
    // parameter gradients
    for (auto* p : layer.params()) {
        std::vector<float> grad(p->g);
        for (std::size_t i = 0; i < p->w.size(); i += std::max<std::size_t>(1, p->w.size() / 17)) {
            const float keep = p->w[i];
            p->w[i] = keep + eps;
            const double lp = h.loss(layer, x.data(), batch);
            p->w[i] = keep - eps;
            const double lm = h.loss(layer, x.data(), batch);
            p->w[i] = keep;
            check_close(grad[i], (lp - lm) / (2.0 * eps), 2e-2);
        }
    }
    // input gradient
    for (std::size_t i = 0; i < x.size(); i += std::max<std::size_t>(1, x.size() / 23)) {
        const float keep = x[i];
        x[i] = keep + eps;
        const double lp = h.loss(layer, x.data(), batch);
        x[i] = keep - eps;
        const double lm = h.loss(layer, x.data(), batch);
        x[i] = keep;
        check_close(dx_got[i], (lp - lm) / (2.0 * eps), 2e-2);
    }
}

std::vector<float> random_input(std::size_t n, std::uint64_t seed) {
    std::vector<float> x(n);
    std::uint64_t rng = seed;
    for (auto& v : x) v = 0.5f * randn(rng);
    return x;
}

}  // namespace

TEST_CASE("im2col and col2im_acc are adjoint") {
    const int c = 3, h = 7, w = 6, k = 3, stride = 2, pad = 1;
    const int oh = conv_out_dim(h, k, stride, pad), ow = conv_out_dim(w, k, stride, pad);
    const std::size_t img_n = static_cast<std::size_t>(c) * h * w;
    const std::size_t col_n = static_cast<std::size_t>(c) * k * k * oh * ow;
    auto x = random_input(img_n, 11);
    auto u = random_input(col_n, 12);
    std::vector<float> cols(col_n), back(img_n, 0.0f);
    im2col(x.data(), cols.data(), c, h, w, k, stride, pad, oh, ow);
    col2im_acc(u.data(), back.data(), c, h, w, k, stride, pad, oh, ow);
    double lhs = 0.0, rhs = 0.0;
    for (std::size_t i = 0; i < col_n; ++i) lhs += static_cast<double>(u[i]) * cols[i];
    for (std::size_t i = 0; i < img_n; ++i) rhs += static_cast<double>(back[i]) * x[i];
    check_close(lhs, rhs, 1e-5);
}

TEST_CASE("dense forward matches naive matmul") {
    std::uint64_t rng = 3;
    Dense d(5, 4, Activation::none, rng);
    auto x = random_input(5 * 3, 21);
    const float* y = d.forward(x.data(), 3);
    for (int b = 0; b < 3; ++b)
        for (int j = 0; j < 4; ++j) {
            double want = d.bias_.w[j];
            for (int i = 0; i < 5; ++i) want += static_cast<double>(x[b * 5 + i]) * d.weight_.w[i * 4 + j];
            check_close(y[b * 4 + j], want, 1e-5);
        }
}

TEST_CASE("dense gradients match finite differences") {
    for (auto act : {Activation::none, Activation::relu, Activation::sigmoid}) {
        std::uint64_t rng = 7;
        Dense d(6, 5, act, rng);
        fd_check(d, random_input(6 * 4, 31), 4, 101);
    }
}

TEST_CASE("conv2d gradients match finite differences") {
    for (auto act : {Activation::none, Activation::relu}) {
        std::uint64_t rng = 9;
        Conv2d conv(2, 6, 6, 3, 3, 2, 1, act, rng);
        fd_check(conv, random_input(2 * 6 * 6 * 2, 41), 2, 102);
    }
}

TEST_CASE("conv_transpose2d inverts conv geometry and passes fd checks") {
    std::uint64_t rng = 13;
    ConvTranspose2d up(3, 4, 4, 2, 4, 2, 1, Activation::none, rng);
    CHECK(up.out_h() == 8);
    CHECK(up.out_w() == 8);
    fd_check(up, random_input(3 * 4 * 4 * 2, 51), 2, 103);
    std::uint64_t rng2 = 14;
    ConvTranspose2d up2(2, 3, 3, 2, 3, 2, 1, Activation::sigmoid, rng2);
    CHECK(up2.out_h() == 5);
    fd_check(up2, random_input(2 * 3 * 3 * 2, 52), 2, 104);
}

TEST_CASE("sequential chains layers and fd-checks end to end") {
    std::uint64_t rng = 17;
    Sequential seq;
    seq.add(std::make_unique<Conv2d>(1, 8, 8, 4, 3, 2, 1, Activation::relu, rng));
    seq.add(std::make_unique<Dense>(4 * 4 * 4, 6, Activation::none, rng));

    auto x = random_input(8 * 8 * 2, 61);
    std::uint64_t crng = 105;
    std::vector<float> coeff(6 * 2);
    for (auto& c : coeff) c = randn(crng);
    auto loss = [&](const float* in) {
        const float* y = seq.forward(in, 2);
        double s = 0.0;
        for (std::size_t i = 0; i < coeff.size(); ++i) s += coeff[i] * static_cast<double>(y[i]);
        return s;
    };
    seq.zero_grad();
    loss(x.data());
    const float* dx = seq.backward(coeff.data(), 2);
    std::vector<float> dx_got(dx, dx + x.size());
    const float eps = 1e-2f;
    for (std::size_t i = 0; i < x.size(); i += 13) {
        const float keep = x[i];
        x[i] = keep + eps;
        const double lp = loss(x.data());
        x[i] = keep - eps;
        const double lm = loss(x.data());
        x[i] = keep;
        check_close(dx_got[i], (lp - lm) / (2.0 * eps), 2e-2);
    }
}

TEST_CASE("adam minimizes a quadratic") {
    ParamBlock p;
    p.w = {5.0f, -3.0f, 2.0f};
    p.init_grad();
    const std::vector<float> target = {1.0f, 2.0f, -0.5f};
    Adam opt({&p}, 0.05f);
    for (int it = 0; it < 2000; ++it) {
        for (std::size_t i = 0; i < p.w.size(); ++i) p.g[i] = 2.0f * (p.w[i] - target[i]);
        opt.step();
    }
    for (std::size_t i = 0; i < p.w.size(); ++i) CHECK(std::abs(p.w[i] - target[i]) < 1e-3f);
}

TEST_CASE("layer math agrees across kernel backends") {
    if (!cdb::simd::avx2_available()) return;
    auto run = [&](const char* backend) {
        REQUIRE(cdb::simd::force_backend(backend));
        std::uint64_t rng = 23;
        Conv2d conv(2, 8, 8, 3, 3, 2, 1, Activation::relu, rng);
        auto x = random_input(2 * 8 * 8 * 2, 71);
        const float* y = conv.forward(x.data(), 2);
        return std::vector<float>(y, y + conv.output_size() * 2);
    };
    auto ys = run("scalar");
    auto ya = run("avx2");
    cdb::simd::force_backend("auto");
    REQUIRE(ys.size() == ya.size());
    for (std::size_t i = 0; i < ys.size(); ++i) CHECK(std::abs(ys[i] - ya[i]) < 1e-4f);
}
