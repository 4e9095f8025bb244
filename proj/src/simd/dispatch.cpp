#include "cdb/simd/kernels.hpp"

#include <atomic>

namespace cdb::simd {

bool avx2_available() {
#if defined(__x86_64__) || defined(_M_X64)
    static const bool ok = __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
    return ok;
#else
    return false;
#endif
}

namespace {
std::atomic<const Kernels*> g_forced{nullptr};
}

const Kernels& active() {
    const Kernels* forced = g_forced.load(std::memory_order_relaxed);
    if (forced) return *forced;
    return avx2_available() ? avx2_kernels() : scalar_kernels();
}

bool force_backend(const std::string& name) {
    if (name == "auto") {
        g_forced.store(nullptr, std::memory_order_relaxed);
        return true;
    }
    if (name == "scalar") {
        g_forced.store(&scalar_kernels(), std::memory_order_relaxed);
        return true;
    }
    if (name == "avx2" && avx2_available()) {
        g_forced.store(&avx2_kernels(), std::memory_order_relaxed);
        return true;
    }
    return false;
}

}  // namespace cdb::simd
