#include "cdb/nn/layers.hpp"

#include <cmath>
#include <cstring>
#include <memory>
#include <stdexcept>

#include "cdb/nn/tensor.hpp"
#include "cdb/simd/kernels.hpp"

namespace cdb::nn {

namespace {

void he_init(ParamBlock& p, std::size_t fan_in, std::size_t n, std::uint64_t& rng) {
    p.w.resize(n);
    const float scale = std::sqrt(2.0f / static_cast<float>(fan_in));
    for (auto& w : p.w) w = scale * randn(rng);
    p.init_grad();
}

}  // namespace

void apply_activation(Activation act, const float* pre, float* y, std::size_t n) {
    switch (act) {
        case Activation::none:
            if (y != pre) std::memcpy(y, pre, n * sizeof(float));
            break;
        case Activation::relu:
            cdb::simd::active().relu_fwd(pre, y, n);
            break;
        case Activation::sigmoid:
            for (std::size_t i = 0; i < n; ++i) y[i] = 1.0f / (1.0f + std::exp(-pre[i]));
            break;
    }
}

void activation_backward(Activation act, const float* pre, const float* y, const float* dy,
                         float* dpre, std::size_t n) {
    switch (act) {
        case Activation::none:
            std::memcpy(dpre, dy, n * sizeof(float));
            break;
        case Activation::relu:
            std::memset(dpre, 0, n * sizeof(float));
            cdb::simd::active().relu_bwd(pre, dy, dpre, n);
            break;
        case Activation::sigmoid:
            for (std::size_t i = 0; i < n; ++i) dpre[i] = dy[i] * y[i] * (1.0f - y[i]);
            break;
    }
}

// --- Conv2d ----------------------------------------------------------------

Conv2d::Conv2d(int in_c, int in_h, int in_w, int out_c, int k, int stride, int pad,
               Activation act, std::uint64_t& rng)
    : in_c_(in_c), in_h_(in_h), in_w_(in_w), out_c_(out_c), k_(k), stride_(stride), pad_(pad),
      out_h_(conv_out_dim(in_h, k, stride, pad)), out_w_(conv_out_dim(in_w, k, stride, pad)),
      act_(act) {
    he_init(weight_, static_cast<std::size_t>(in_c) * k * k,
            static_cast<std::size_t>(out_c) * in_c * k * k, rng);
    bias_.w.assign(out_c, 0.0f);
    bias_.init_grad();
}

std::size_t Conv2d::output_size() const {
    return static_cast<std::size_t>(out_c_) * out_h_ * out_w_;
}

const float* Conv2d::forward(const float* x, int batch) {
    const auto& ker = cdb::simd::active();
    const std::size_t in_sz = static_cast<std::size_t>(in_c_) * in_h_ * in_w_;
    const std::size_t out_sz = output_size();
    const std::size_t K = static_cast<std::size_t>(in_c_) * k_ * k_;
    const std::size_t N = static_cast<std::size_t>(out_h_) * out_w_;
    cached_batch_ = batch;
    x_cache_.assign(x, x + in_sz * batch);
    cols_.resize(K * N);
    pre_.resize(out_sz * batch);
    y_.resize(out_sz * batch);
    for (int b = 0; b < batch; ++b) {
        im2col(x + b * in_sz, cols_.data(), in_c_, in_h_, in_w_, k_, stride_, pad_, out_h_,
               out_w_);
        float* pre = pre_.data() + b * out_sz;
        std::memset(pre, 0, out_sz * sizeof(float));
        ker.gemm_acc(weight_.w.data(), cols_.data(), pre, out_c_, N, K);
        ker.add_bias(bias_.w.data(), pre, out_c_, N);
    }
    apply_activation(act_, pre_.data(), y_.data(), out_sz * batch);
    return y_.data();
}

const float* Conv2d::backward(const float* dy, int batch) {
    const auto& ker = cdb::simd::active();
    const std::size_t in_sz = static_cast<std::size_t>(in_c_) * in_h_ * in_w_;
    const std::size_t out_sz = output_size();
    const std::size_t K = static_cast<std::size_t>(in_c_) * k_ * k_;
    const std::size_t N = static_cast<std::size_t>(out_h_) * out_w_;
    std::vector<float> dpre(out_sz);
    dcols_.resize(K * N);
    std::vector<float> colsT(N * K);
    dx_.assign(in_sz * batch, 0.0f);
    wt_.resize(K * out_c_);
    transpose(weight_.w.data(), wt_.data(), out_c_, K);
    for (int b = 0; b < batch; ++b) {
        activation_backward(act_, pre_.data() + b * out_sz, y_.data() + b * out_sz,
                            dy + b * out_sz, dpre.data(), out_sz);
        // bias grad
        for (int c = 0; c < out_c_; ++c) {
            float s = 0.0f;
            const float* row = dpre.data() + c * N;
            for (std::size_t j = 0; j < N; ++j) s += row[j];
            bias_.g[c] += s;
        }
        // weight grad: dW += dpre (out_c x N) * cols^T (N x K)
        im2col(x_cache_.data() + b * in_sz, cols_.data(), in_c_, in_h_, in_w_, k_, stride_,
               pad_, out_h_, out_w_);
        transpose(cols_.data(), colsT.data(), K, N);
        ker.gemm_acc(dpre.data(), colsT.data(), weight_.g.data(), out_c_, K, N);
        // input grad: dcols = W^T (K x out_c) * dpre (out_c x N)
        std::memset(dcols_.data(), 0, dcols_.size() * sizeof(float));
        ker.gemm_acc(wt_.data(), dpre.data(), dcols_.data(), K, N, out_c_);
        col2im_acc(dcols_.data(), dx_.data() + b * in_sz, in_c_, in_h_, in_w_, k_, stride_,
                   pad_, out_h_, out_w_);
    }
    return dx_.data();
}

// --- ConvTranspose2d -------------------------------------------------------

ConvTranspose2d::ConvTranspose2d(int in_c, int in_h, int in_w, int out_c, int k, int stride,
                                 int pad, Activation act, std::uint64_t& rng)
    : in_c_(in_c), in_h_(in_h), in_w_(in_w), out_c_(out_c), k_(k), stride_(stride), pad_(pad),
      out_h_((in_h - 1) * stride + k - 2 * pad), out_w_((in_w - 1) * stride + k - 2 * pad),
      act_(act) {
    // fan_in of the equivalent forward conv
    he_init(weight_, static_cast<std::size_t>(in_c) * k * k,
            static_cast<std::size_t>(in_c) * out_c * k * k, rng);
    bias_.w.assign(out_c, 0.0f);
    bias_.init_grad();
}

std::size_t ConvTranspose2d::output_size() const {
    return static_cast<std::size_t>(out_c_) * out_h_ * out_w_;
}

const float* ConvTranspose2d::forward(const float* x, int batch) {
    const auto& ker = cdb::simd::active();
    const std::size_t in_sz = static_cast<std::size_t>(in_c_) * in_h_ * in_w_;
    const std::size_t out_sz = output_size();
    const std::size_t K = static_cast<std::size_t>(out_c_) * k_ * k_;
    const std::size_t N = static_cast<std::size_t>(in_h_) * in_w_;
    cached_batch_ = batch;
    x_cache_.assign(x, x + in_sz * batch);
    cols_.resize(K * N);
    pre_.assign(out_sz * batch, 0.0f);
    y_.resize(out_sz * batch);
    wt_.resize(K * in_c_);
    transpose(weight_.w.data(), wt_.data(), in_c_, K);
    for (int b = 0; b < batch; ++b) {
        // cols = W^T (K x in_c) * x (in_c x N); col2im with the geometry of
        // the reverse conv (out -> in) scatters into the upsampled output.
        std::memset(cols_.data(), 0, cols_.size() * sizeof(float));
        ker.gemm_acc(wt_.data(), x + b * in_sz, cols_.data(), K, N, in_c_);
        float* pre = pre_.data() + b * out_sz;
        col2im_acc(cols_.data(), pre, out_c_, out_h_, out_w_, k_, stride_, pad_, in_h_, in_w_);
        for (int c = 0; c < out_c_; ++c) {
            float* plane = pre + static_cast<std::size_t>(c) * out_h_ * out_w_;
            for (int i = 0; i < out_h_ * out_w_; ++i) plane[i] += bias_.w[c];
        }
    }
    apply_activation(act_, pre_.data(), y_.data(), out_sz * batch);
    return y_.data();
}

const float* ConvTranspose2d::backward(const float* dy, int batch) {
    const auto& ker = cdb::simd::active();
    const std::size_t in_sz = static_cast<std::size_t>(in_c_) * in_h_ * in_w_;
    const std::size_t out_sz = output_size();
    const std::size_t K = static_cast<std::size_t>(out_c_) * k_ * k_;
    const std::size_t N = static_cast<std::size_t>(in_h_) * in_w_;
    std::vector<float> dpre(out_sz);
    dpre_cols_.resize(K * N);
    std::vector<float> dcolsT(N * K);
    dx_.assign(in_sz * batch, 0.0f);
    for (int b = 0; b < batch; ++b) {
        activation_backward(act_, pre_.data() + b * out_sz, y_.data() + b * out_sz,
                            dy + b * out_sz, dpre.data(), out_sz);
        for (int c = 0; c < out_c_; ++c) {
            const float* plane = dpre.data() + static_cast<std::size_t>(c) * out_h_ * out_w_;
            float s = 0.0f;
            for (int i = 0; i < out_h_ * out_w_; ++i) s += plane[i];
            bias_.g[c] += s;
        }
        // gather the same patches the forward scattered into
        im2col(dpre.data(), dpre_cols_.data(), out_c_, out_h_, out_w_, k_, stride_, pad_, in_h_,
               in_w_);
        // dX = W (in_c x K) * dpre_cols (K x N)
        ker.gemm_acc(weight_.w.data(), dpre_cols_.data(), dx_.data() + b * in_sz, in_c_, N, K);
        // dW += X (in_c x N) * dpre_cols^T (N x K)
        transpose(dpre_cols_.data(), dcolsT.data(), K, N);
        ker.gemm_acc(x_cache_.data() + b * in_sz, dcolsT.data(), weight_.g.data(), in_c_, K, N);
    }
    return dx_.data();
}

// --- Dense -----------------------------------------------------------------

Dense::Dense(int in_dim, int out_dim, Activation act, std::uint64_t& rng)
    : in_dim_(in_dim), out_dim_(out_dim), act_(act) {
    he_init(weight_, in_dim, static_cast<std::size_t>(in_dim) * out_dim, rng);
    bias_.w.assign(out_dim, 0.0f);
    bias_.init_grad();
}

const float* Dense::forward(const float* x, int batch) {
    const auto& ker = cdb::simd::active();
    cached_batch_ = batch;
    x_cache_.assign(x, x + static_cast<std::size_t>(in_dim_) * batch);
    pre_.assign(static_cast<std::size_t>(out_dim_) * batch, 0.0f);
    y_.resize(pre_.size());
    ker.gemm_acc(x, weight_.w.data(), pre_.data(), batch, out_dim_, in_dim_);
    for (int b = 0; b < batch; ++b)
        for (int j = 0; j < out_dim_; ++j) pre_[b * out_dim_ + j] += bias_.w[j];
    apply_activation(act_, pre_.data(), y_.data(), pre_.size());
    return y_.data();
}

const float* Dense::backward(const float* dy, int batch) {
    const auto& ker = cdb::simd::active();
    dpre_.resize(static_cast<std::size_t>(out_dim_) * batch);
    activation_backward(act_, pre_.data(), y_.data(), dy, dpre_.data(), dpre_.size());
    for (int b = 0; b < batch; ++b)
        for (int j = 0; j < out_dim_; ++j) bias_.g[j] += dpre_[b * out_dim_ + j];
    // dW += X^T (in x B) * dpre (B x out)
    xt_.resize(static_cast<std::size_t>(in_dim_) * batch);
    transpose(x_cache_.data(), xt_.data(), batch, in_dim_);
    ker.gemm_acc(xt_.data(), dpre_.data(), weight_.g.data(), in_dim_, out_dim_, batch);
    // dX = dpre (B x out) * W^T (out x in)
    wt_.resize(weight_.w.size());
    transpose(weight_.w.data(), wt_.data(), in_dim_, out_dim_);
    dx_.assign(static_cast<std::size_t>(in_dim_) * batch, 0.0f);
    ker.gemm_acc(dpre_.data(), wt_.data(), dx_.data(), batch, in_dim_, out_dim_);
    return dx_.data();
}

// --- Sequential ------------------------------------------------------------

const float* Sequential::forward(const float* x, int batch) {
    const float* cur = x;
    for (auto& l : layers_) cur = l->forward(cur, batch);
    return cur;
}

const float* Sequential::backward(const float* dy, int batch) {
    const float* cur = dy;
    for (auto it = layers_.rbegin(); it != layers_.rend(); ++it)
        cur = (*it)->backward(cur, batch);
    return cur;
}

std::vector<ParamBlock*> Sequential::params() {
    std::vector<ParamBlock*> out;
    for (auto& l : layers_)
        for (auto* p : l->params()) out.push_back(p);
    return out;
}

void Sequential::zero_grad() {
    for (auto& l : layers_) l->zero_grad();
}

}  // namespace cdb::nn
