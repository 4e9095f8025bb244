#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "cdb/simd/kernels.hpp"

using namespace cdb::simd;

namespace {

std::vector<float> random_vec(std::size_t n, std::uint32_t seed, float lo = -2.0f,
                              float hi = 2.0f) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<float> dist(lo, hi);
    std::vector<float> v(n);
    for (auto& x : v) x = dist(rng);
    return v;
}

// FMA reassociation makes AVX2 results differ from scalar in the last ulps;
// compare with a relative tolerance scaled to the reduction length.
void check_close(const std::vector<float>& a, const std::vector<float>& b, float tol) {
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i)
        CHECK(std::abs(a[i] - b[i]) <= tol * (1.0f + std::abs(a[i])));
}

}  // namespace

TEST_CASE("dispatch selects a live table") {
    CHECK(active().gemm_acc != nullptr);
    CHECK(force_backend("scalar"));
    CHECK(std::string(active().name) == "scalar");
    CHECK(force_backend("auto"));
    if (avx2_available()) {
        CHECK(force_backend("avx2"));
        CHECK(std::string(active().name) == "avx2");
        CHECK(force_backend("auto"));
    } else {
        CHECK_FALSE(force_backend("avx2"));
    }
    CHECK_FALSE(force_backend("never-heard-of-it"));
}

TEST_CASE("gemm variants agree with scalar reference") {
    if (!avx2_available()) return;
    const auto& ref = scalar_kernels();
    const auto& vec = avx2_kernels();
    for (const auto [m, n, k] : {std::array<std::size_t, 3>{4, 7, 5},
                                 {16, 33, 20},
                                 {1, 8, 1},
                                 {13, 64, 31},
                                 {5, 1, 9}}) {
        const auto a = random_vec(m * k, 1);
        const auto b = random_vec(k * n, 2);
        auto c0 = random_vec(m * n, 3);
        auto c1 = c0;
        ref.gemm_acc(a.data(), b.data(), c0.data(), m, n, k);
        vec.gemm_acc(a.data(), b.data(), c1.data(), m, n, k);
        check_close(c0, c1, 1e-5f * static_cast<float>(k));
    }
}

TEST_CASE("elementwise variants agree with scalar reference") {
    if (!avx2_available()) return;
    const auto& ref = scalar_kernels();
    const auto& vec = avx2_kernels();
    for (const std::size_t n : {1u, 7u, 8u, 9u, 255u, 1024u}) {
        const auto x = random_vec(n, 10);
        auto y0 = random_vec(n, 11);
        auto y1 = y0;
        ref.axpy(0.37f, x.data(), y0.data(), n);
        vec.axpy(0.37f, x.data(), y1.data(), n);
        check_close(y0, y1, 1e-6f);

        auto s0 = x, s1 = x;
        ref.scale(-1.3f, s0.data(), n);
        vec.scale(-1.3f, s1.data(), n);
        check_close(s0, s1, 1e-6f);

        std::vector<float> r0(n), r1(n);
        ref.relu_fwd(x.data(), r0.data(), n);
        vec.relu_fwd(x.data(), r1.data(), n);
        CHECK(r0 == r1);

        const auto dy = random_vec(n, 12);
        auto d0 = random_vec(n, 13);
        auto d1 = d0;
        ref.relu_bwd(x.data(), dy.data(), d0.data(), n);
        vec.relu_bwd(x.data(), dy.data(), d1.data(), n);
        CHECK(d0 == d1);

        const auto y = random_vec(n, 14);
        CHECK(ref.dot(x.data(), y.data(), n) ==
              doctest::Approx(vec.dot(x.data(), y.data(), n)).epsilon(1e-4));
        CHECK(ref.sum_sq_diff(x.data(), y.data(), n) ==
              doctest::Approx(vec.sum_sq_diff(x.data(), y.data(), n)).epsilon(1e-4));
    }
}

TEST_CASE("add_bias and adam variants agree with scalar reference") {
    if (!avx2_available()) return;
    const auto& ref = scalar_kernels();
    const auto& vec = avx2_kernels();
    const std::size_t rows = 5, cols = 37;
    const auto bias = random_vec(rows, 20);
    auto x0 = random_vec(rows * cols, 21);
    auto x1 = x0;
    ref.add_bias(bias.data(), x0.data(), rows, cols);
    vec.add_bias(bias.data(), x1.data(), rows, cols);
    check_close(x0, x1, 1e-6f);

    const std::size_t n = 131;
    const auto g = random_vec(n, 22);
    auto p0 = random_vec(n, 23), m0 = random_vec(n, 24, 0.0f, 1.0f),
         v0 = random_vec(n, 25, 0.0f, 1.0f);
    auto p1 = p0, m1 = m0, v1 = v0;
    ref.adam_step(p0.data(), m0.data(), v0.data(), g.data(), n, 1e-3f, 0.9f, 0.999f, 1e-8f,
                  0.5f, 0.25f);
    vec.adam_step(p1.data(), m1.data(), v1.data(), g.data(), n, 1e-3f, 0.9f, 0.999f, 1e-8f,
                  0.5f, 0.25f);
    check_close(p0, p1, 1e-5f);
    check_close(m0, m1, 1e-6f);
    check_close(v0, v1, 1e-6f);
}

TEST_CASE("gemm matches a plain triple loop") {
    const std::size_t m = 6, n = 9, k = 11;
    const auto a = random_vec(m * k, 30);
    const auto b = random_vec(k * n, 31);
    std::vector<float> c(m * n, 0.0f);
    active().gemm_acc(a.data(), b.data(), c.data(), m, n, k);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            double s = 0;
            for (std::size_t p = 0; p < k; ++p) s += a[i * k + p] * b[p * n + j];
            CHECK(c[i * n + j] == doctest::Approx(s).epsilon(1e-4));
        }
}
