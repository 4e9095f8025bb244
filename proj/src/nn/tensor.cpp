#include "cdb/nn/tensor.hpp"

#include <cmath>
#include <cstring>

#include "cdb/scm/graph.hpp"

namespace cdb::nn {

float randn(std::uint64_t& state) {
    // Box-Muller on two splitmix64 uniforms; one draw per call is enough here.
    double u1 = cdb::scm::next_unit(state);
    const double u2 = cdb::scm::next_unit(state);
    if (u1 < 1e-12) u1 = 1e-12;
    return static_cast<float>(std::sqrt(-2.0 * std::log(u1)) *
                              std::cos(2.0 * 3.14159265358979323846 * u2));
}

void transpose(const float* a, float* b, std::size_t m, std::size_t n) {
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) b[j * m + i] = a[i * n + j];
}

void im2col(const float* img, float* cols, int channels, int height, int width, int k,
            int stride, int pad, int out_h, int out_w) {
    const int n = out_h * out_w;
    for (int c = 0; c < channels; ++c) {
        for (int ki = 0; ki < k; ++ki) {
            for (int kj = 0; kj < k; ++kj) {
                float* row = cols + ((c * k + ki) * k + kj) * n;
                for (int oy = 0; oy < out_h; ++oy) {
                    const int y = oy * stride - pad + ki;
                    if (y < 0 || y >= height) {
                        std::memset(row + oy * out_w, 0, sizeof(float) * out_w);
                        continue;
                    }
                    const float* src = img + (c * height + y) * width;
                    for (int ox = 0; ox < out_w; ++ox) {
                        const int x = ox * stride - pad + kj;
                        row[oy * out_w + ox] = (x >= 0 && x < width) ? src[x] : 0.0f;
                    }
                }
            }
        }
    }
}

void col2im_acc(const float* cols, float* img, int channels, int height, int width, int k,
                int stride, int pad, int out_h, int out_w) {
    const int n = out_h * out_w;
    for (int c = 0; c < channels; ++c) {
        for (int ki = 0; ki < k; ++ki) {
            for (int kj = 0; kj < k; ++kj) {
                const float* row = cols + ((c * k + ki) * k + kj) * n;
                for (int oy = 0; oy < out_h; ++oy) {
                    const int y = oy * stride - pad + ki;
                    if (y < 0 || y >= height) continue;
                    float* dst = img + (c * height + y) * width;
                    for (int ox = 0; ox < out_w; ++ox) {
                        const int x = ox * stride - pad + kj;
                        if (x >= 0 && x < width) dst[x] += row[oy * out_w + ox];
                    }
                }
            }
        }
    }
}

}  // namespace cdb::nn
