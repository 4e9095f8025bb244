#pragma once

// Data-parallel arithmetic kernels used by the nn/ and metrics/ inner loops.
// Every kernel has a scalar reference implementation and may have SIMD
// variants (AVX2+FMA on x86-64). The active table is chosen at runtime from
// CPU capabilities; tests check variant equivalence against the scalar
// reference.

#include <cstddef>
#include <string>

namespace cdb::simd {

struct Kernels {
    // C(m x n) += A(m x k) * B(k x n), all row-major, no aliasing.
    void (*gemm_acc)(const float* a, const float* b, float* c,
                     std::size_t m, std::size_t n, std::size_t k);
    // y += alpha * x
    void (*axpy)(float alpha, const float* x, float* y, std::size_t n);
    // y = x
    void (*scale)(float alpha, float* x, std::size_t n);
    void (*add_bias)(const float* bias, float* x, std::size_t rows, std::size_t cols);
    void (*relu_fwd)(const float* x, float* y, std::size_t n);
    // dx += dy where x > 0
    void (*relu_bwd)(const float* x, const float* dy, float* dx, std::size_t n);
    float (*dot)(const float* x, const float* y, std::size_t n);
    float (*sum_sq_diff)(const float* x, const float* y, std::size_t n);
    // Adam step on a parameter block; t-corrected rates precomputed by caller.
    void (*adam_step)(float* p, float* m, float* v, const float* g, std::size_t n,
                      float lr, float beta1, float beta2, float eps,
                      float bias_corr1, float bias_corr2);
    const char* name;
};

const Kernels& scalar_kernels();
bool avx2_available();
// Returns the AVX2 table; only valid to call kernels from it when
// avx2_available() is true.
const Kernels& avx2_kernels();

// Runtime-selected table (AVX2 when the CPU supports it, scalar otherwise).
// force_backend overrides the selection; pass "scalar", "avx2" or "auto".
const Kernels& active();
bool force_backend(const std::string& name);

}  // namespace cdb::simd
