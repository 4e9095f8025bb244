#include "cdb/simd/kernels.hpp"

#include <cmath>

namespace cdb::simd {
namespace {

void gemm_acc_scalar(const float* a, const float* b, float* c,
                     std::size_t m, std::size_t n, std::size_t k) {
    for (std::size_t i = 0; i < m; ++i) {
        const float* arow = a + i * k;
        float* crow = c + i * n;
        for (std::size_t p = 0; p < k; ++p) {
            const float av = arow[p];
            const float* brow = b + p * n;
            for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

void axpy_scalar(float alpha, const float* x, float* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void scale_scalar(float alpha, float* x, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) x[i] *= alpha;
}

void add_bias_scalar(const float* bias, float* x, std::size_t rows, std::size_t cols) {
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) x[r * cols + c] += bias[r];
}

void relu_fwd_scalar(const float* x, float* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] = x[i] > 0.0f ? x[i] : 0.0f;
}

void relu_bwd_scalar(const float* x, const float* dy, float* dx, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i)
        if (x[i] > 0.0f) dx[i] += dy[i];
}

float dot_scalar(const float* x, const float* y, std::size_t n) {
    float s = 0.0f;
    for (std::size_t i = 0; i < n; ++i) s += x[i] * y[i];
    return s;
}

float sum_sq_diff_scalar(const float* x, const float* y, std::size_t n) {
    float s = 0.0f;
    for (std::size_t i = 0; i < n; ++i) {
        const float d = x[i] - y[i];
        s += d * d;
    }
    return s;
}

void adam_step_scalar(float* p, float* m, float* v, const float* g, std::size_t n,
                      float lr, float beta1, float beta2, float eps,
                      float bias_corr1, float bias_corr2) {
    for (std::size_t i = 0; i < n; ++i) {
        m[i] = beta1 * m[i] + (1.0f - beta1) * g[i];
        v[i] = beta2 * v[i] + (1.0f - beta2) * g[i] * g[i];
        const float mhat = m[i] / bias_corr1;
        const float vhat = v[i] / bias_corr2;
        p[i] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
}

}  // namespace

const Kernels& scalar_kernels() {
    static const Kernels k = {
        gemm_acc_scalar, axpy_scalar,      scale_scalar, add_bias_scalar,
        relu_fwd_scalar, relu_bwd_scalar,  dot_scalar,   sum_sq_diff_scalar,
        adam_step_scalar, "scalar",
    };
    return k;
}

}  // namespace cdb::simd
