#pragma once

#include <cstdint>
#include <vector>

namespace cdb::nn {

// Gaussian(0,1) draw from a splitmix64 stream (Box-Muller).
float randn(std::uint64_t& state);

// B = A^T for a row-major M x N matrix.
void transpose(const float* a, float* b, std::size_t m, std::size_t n);

// im2col for NCHW single samples: output is (C*k*k) x (out_h*out_w).
void im2col(const float* img, float* cols, int channels, int height, int width, int k,
            int stride, int pad, int out_h, int out_w);
// Scatter-add inverse of im2col.
void col2im_acc(const float* cols, float* img, int channels, int height, int width, int k,
                int stride, int pad, int out_h, int out_w);

inline int conv_out_dim(int in, int k, int stride, int pad) {
    return (in + 2 * pad - k) / stride + 1;
}

}  // namespace cdb::nn
