#pragma once

// Minimal training-oriented layer set: each layer owns its parameters,
// gradient accumulators and forward caches. Batches are NCHW, float32.
// forward() returns a pointer into the layer-owned output buffer;
// backward() consumes dL/dy, accumulates parameter gradients and returns
// dL/dx. Inner loops go through the cdb::simd kernel table.

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace cdb::nn {

enum class Activation { none, relu, sigmoid };

struct ParamBlock {
    std::vector<float> w;  // parameters
    std::vector<float> g;  // gradient accumulator
    void init_grad() { g.assign(w.size(), 0.0f); }
};

class Layer {
public:
    virtual ~Layer() = default;
    virtual const float* forward(const float* x, int batch) = 0;
    virtual const float* backward(const float* dy, int batch) = 0;
    virtual std::vector<ParamBlock*> params() = 0;
    virtual std::size_t output_size() const = 0;  // per sample
    void zero_grad() {
        for (auto* p : params()) p->g.assign(p->w.size(), 0.0f);
    }
};

class Conv2d final : public Layer {
public:
    Conv2d(int in_c, int in_h, int in_w, int out_c, int k, int stride, int pad, Activation act,
           std::uint64_t& rng);
    const float* forward(const float* x, int batch) override;
    const float* backward(const float* dy, int batch) override;
    std::vector<ParamBlock*> params() override { return {&weight_, &bias_}; }
    std::size_t output_size() const override;

    int out_h() const { return out_h_; }
    int out_w() const { return out_w_; }
    int out_c() const { return out_c_; }

    ParamBlock weight_;  // (out_c) x (in_c*k*k)
    ParamBlock bias_;    // out_c

private:
    int in_c_, in_h_, in_w_, out_c_, k_, stride_, pad_, out_h_, out_w_;
    Activation act_;
    std::vector<float> cols_, x_cache_, pre_, y_, dcols_, dx_, wt_, dyt_buf_;
    int cached_batch_ = 0;
};

class ConvTranspose2d final : public Layer {
public:
    ConvTranspose2d(int in_c, int in_h, int in_w, int out_c, int k, int stride, int pad,
                    Activation act, std::uint64_t& rng);
    const float* forward(const float* x, int batch) override;
    const float* backward(const float* dy, int batch) override;
    std::vector<ParamBlock*> params() override { return {&weight_, &bias_}; }
    std::size_t output_size() const override;

    int out_h() const { return out_h_; }
    int out_w() const { return out_w_; }
    int out_c() const { return out_c_; }

    ParamBlock weight_;  // (in_c) x (out_c*k*k)
    ParamBlock bias_;    // out_c

private:
    int in_c_, in_h_, in_w_, out_c_, k_, stride_, pad_, out_h_, out_w_;
    Activation act_;
    std::vector<float> cols_, x_cache_, pre_, y_, dx_, wt_, dpre_cols_;
    int cached_batch_ = 0;
};

class Dense final : public Layer {
public:
    Dense(int in_dim, int out_dim, Activation act, std::uint64_t& rng);
    const float* forward(const float* x, int batch) override;
    const float* backward(const float* dy, int batch) override;
    std::vector<ParamBlock*> params() override { return {&weight_, &bias_}; }
    std::size_t output_size() const override { return static_cast<std::size_t>(out_dim_); }

    ParamBlock weight_;  // (in_dim) x (out_dim), y = x W + b
    ParamBlock bias_;

private:
    int in_dim_, out_dim_;
    Activation act_;
    std::vector<float> x_cache_, pre_, y_, dx_, xt_, wt_, dpre_;
    int cached_batch_ = 0;
};

// Chain helper used by the encoder/decoder/classifier trunks.
class Sequential {
public:
    void add(std::unique_ptr<Layer> layer) { layers_.push_back(std::move(layer)); }
    const float* forward(const float* x, int batch);
    const float* backward(const float* dy, int batch);
    std::vector<ParamBlock*> params();
    void zero_grad();
    Layer& back() { return *layers_.back(); }
    std::size_t size() const { return layers_.size(); }

private:
    std::vector<std::unique_ptr<Layer>> layers_;
};

void apply_activation(Activation act, const float* pre, float* y, std::size_t n);
// dpre = dy * act'(pre) given pre-activation values
void activation_backward(Activation act, const float* pre, const float* y, const float* dy,
                         float* dpre, std::size_t n);

}  // namespace cdb::nn
