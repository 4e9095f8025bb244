// AVX2+FMA kernel variants. This translation unit is compiled with
// -mavx2 -mfma; nothing here may run unless avx2_available() reported true.

#include "cdb/simd/kernels.hpp"

#if defined(__x86_64__) || defined(_M_X64)
#define CDB_HAVE_AVX2_TU 1
#include <immintrin.h>
#else
#define CDB_HAVE_AVX2_TU 0
#endif

#include <cmath>

namespace cdb::simd {

#if CDB_HAVE_AVX2_TU

namespace {

inline float hsum256(__m256 v) {
    __m128 lo = _mm256_castps256_ps128(v);
    __m128 hi = _mm256_extractf128_ps(v, 1);
    lo = _mm_add_ps(lo, hi);
    lo = _mm_hadd_ps(lo, lo);
    lo = _mm_hadd_ps(lo, lo);
    return _mm_cvtss_f32(lo);
}

// Broadcast-FMA gemm: for each (i, p) scale row p of B into row i of C.
// Two k-steps are interleaved to hide FMA latency a little.
void gemm_acc_avx2(const float* a, const float* b, float* c,
                   std::size_t m, std::size_t n, std::size_t k) {
    const std::size_t n8 = n & ~std::size_t(7);
    for (std::size_t i = 0; i < m; ++i) {
        const float* arow = a + i * k;
        float* crow = c + i * n;
        std::size_t p = 0;
        for (; p + 1 < k; p += 2) {
            const __m256 a0 = _mm256_set1_ps(arow[p]);
            const __m256 a1 = _mm256_set1_ps(arow[p + 1]);
            const float* b0 = b + p * n;
            const float* b1 = b0 + n;
            std::size_t j = 0;
            for (; j < n8; j += 8) {
                __m256 acc = _mm256_loadu_ps(crow + j);
                acc = _mm256_fmadd_ps(a0, _mm256_loadu_ps(b0 + j), acc);
                acc = _mm256_fmadd_ps(a1, _mm256_loadu_ps(b1 + j), acc);
                _mm256_storeu_ps(crow + j, acc);
            }
            for (; j < n; ++j) crow[j] += arow[p] * b0[j] + arow[p + 1] * b1[j];
        }
        for (; p < k; ++p) {
            const __m256 a0 = _mm256_set1_ps(arow[p]);
            const float* b0 = b + p * n;
            std::size_t j = 0;
            for (; j < n8; j += 8) {
                __m256 acc = _mm256_loadu_ps(crow + j);
                acc = _mm256_fmadd_ps(a0, _mm256_loadu_ps(b0 + j), acc);
                _mm256_storeu_ps(crow + j, acc);
            }
            for (; j < n; ++j) crow[j] += arow[p] * b0[j];
        }
    }
}

void axpy_avx2(float alpha, const float* x, float* y, std::size_t n) {
    const __m256 va = _mm256_set1_ps(alpha);
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        __m256 vy = _mm256_loadu_ps(y + i);
        vy = _mm256_fmadd_ps(va, _mm256_loadu_ps(x + i), vy);
        _mm256_storeu_ps(y + i, vy);
    }
    for (; i < n; ++i) y[i] += alpha * x[i];
}

void scale_avx2(float alpha, float* x, std::size_t n) {
    const __m256 va = _mm256_set1_ps(alpha);
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8)
        _mm256_storeu_ps(x + i, _mm256_mul_ps(va, _mm256_loadu_ps(x + i)));
    for (; i < n; ++i) x[i] *= alpha;
}

void add_bias_avx2(const float* bias, float* x, std::size_t rows, std::size_t cols) {
    for (std::size_t r = 0; r < rows; ++r) {
        const __m256 vb = _mm256_set1_ps(bias[r]);
        float* row = x + r * cols;
        std::size_t c = 0;
        for (; c + 8 <= cols; c += 8)
            _mm256_storeu_ps(row + c, _mm256_add_ps(vb, _mm256_loadu_ps(row + c)));
        for (; c < cols; ++c) row[c] += bias[r];
    }
}

void relu_fwd_avx2(const float* x, float* y, std::size_t n) {
    const __m256 zero = _mm256_setzero_ps();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8)
        _mm256_storeu_ps(y + i, _mm256_max_ps(zero, _mm256_loadu_ps(x + i)));
    for (; i < n; ++i) y[i] = x[i] > 0.0f ? x[i] : 0.0f;
}

void relu_bwd_avx2(const float* x, const float* dy, float* dx, std::size_t n) {
    const __m256 zero = _mm256_setzero_ps();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        const __m256 mask = _mm256_cmp_ps(_mm256_loadu_ps(x + i), zero, _CMP_GT_OQ);
        const __m256 add = _mm256_and_ps(mask, _mm256_loadu_ps(dy + i));
        _mm256_storeu_ps(dx + i, _mm256_add_ps(_mm256_loadu_ps(dx + i), add));
    }
    for (; i < n; ++i)
        if (x[i] > 0.0f) dx[i] += dy[i];
}

float dot_avx2(const float* x, const float* y, std::size_t n) {
    __m256 acc = _mm256_setzero_ps();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8)
        acc = _mm256_fmadd_ps(_mm256_loadu_ps(x + i), _mm256_loadu_ps(y + i), acc);
    float s = hsum256(acc);
    for (; i < n; ++i) s += x[i] * y[i];
    return s;
}

float sum_sq_diff_avx2(const float* x, const float* y, std::size_t n) {
    __m256 acc = _mm256_setzero_ps();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        const __m256 d = _mm256_sub_ps(_mm256_loadu_ps(x + i), _mm256_loadu_ps(y + i));
        acc = _mm256_fmadd_ps(d, d, acc);
    }
    float s = hsum256(acc);
    for (; i < n; ++i) {
        const float d = x[i] - y[i];
        s += d * d;
    }
    return s;
}

void adam_step_avx2(float* p, float* m, float* v, const float* g, std::size_t n,
                    float lr, float beta1, float beta2, float eps,
                    float bias_corr1, float bias_corr2) {
    const __m256 vb1 = _mm256_set1_ps(beta1);
    const __m256 vb1c = _mm256_set1_ps(1.0f - beta1);
    const __m256 vb2 = _mm256_set1_ps(beta2);
    const __m256 vb2c = _mm256_set1_ps(1.0f - beta2);
    const __m256 vlr = _mm256_set1_ps(lr);
    const __m256 veps = _mm256_set1_ps(eps);
    const __m256 vc1 = _mm256_set1_ps(1.0f / bias_corr1);
    const __m256 vc2 = _mm256_set1_ps(1.0f / bias_corr2);
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        const __m256 vg = _mm256_loadu_ps(g + i);
        __m256 vm = _mm256_loadu_ps(m + i);
        __m256 vv = _mm256_loadu_ps(v + i);
        vm = _mm256_fmadd_ps(vb1c, vg, _mm256_mul_ps(vb1, vm));
        vv = _mm256_fmadd_ps(vb2c, _mm256_mul_ps(vg, vg), _mm256_mul_ps(vb2, vv));
        _mm256_storeu_ps(m + i, vm);
        _mm256_storeu_ps(v + i, vv);
        const __m256 mhat = _mm256_mul_ps(vm, vc1);
        const __m256 vhat = _mm256_mul_ps(vv, vc2);
        const __m256 denom = _mm256_add_ps(_mm256_sqrt_ps(vhat), veps);
        __m256 vp = _mm256_loadu_ps(p + i);
        vp = _mm256_sub_ps(vp, _mm256_div_ps(_mm256_mul_ps(vlr, mhat), denom));
        _mm256_storeu_ps(p + i, vp);
    }
    for (; i < n; ++i) {
        m[i] = beta1 * m[i] + (1.0f - beta1) * g[i];
        v[i] = beta2 * v[i] + (1.0f - beta2) * g[i] * g[i];
        const float mhat = m[i] / bias_corr1;
        const float vhat = v[i] / bias_corr2;
        p[i] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
}

}  // namespace

const Kernels& avx2_kernels() {
    static const Kernels k = {
        gemm_acc_avx2, axpy_avx2,     scale_avx2, add_bias_avx2,
        relu_fwd_avx2, relu_bwd_avx2, dot_avx2,   sum_sq_diff_avx2,
        adam_step_avx2, "avx2",
    };
    return k;
}

#else

const Kernels& avx2_kernels() { return scalar_kernels(); }

#endif  // CDB_HAVE_AVX2_TU

}  // namespace cdb::simd
