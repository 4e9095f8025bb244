#pragma once

// Convolutional VAE family used by the benchmark: a shared encoder/decoder
// backbone plus per-variant regularizers (selected in losses/train). The
// decoder emits logits; sigmoid is applied by the loss/generate paths so the
// Bernoulli reconstruction term stays numerically stable.

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "cdb/nn/layers.hpp"

namespace cdb::models {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ShapeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct TrainConfig {
    int batch_size = 64;
    int latent_dim = 64;
    float beta = 10.0f;           // beta-vae / beta-tcvae weight
    float gamma = 4.0f;           // factor-vae discriminator weight
    float lambda_d = 10.0f;       // dip-vae-i diagonal penalty
    float lambda_od = 10.0f;      // dip-vae-i off-diagonal penalty
    float supervised_weight = 4.0f;
    float supervision_fraction = 0.10f;
    float lambda_bb = 2.0f;       // bounding-box reconstruction weight
    int epochs = 10;
    float lr = 1e-3f;
    float disc_lr = 1e-4f;        // factor-vae discriminator optimizer
    int base_channels = 32;       // first conv stage width
    int hidden_dim = 256;
    std::uint64_t seed = 0;

    void validate() const;
    std::string canonical_json() const;
    std::uint64_t hash() const;
};

// Model variant as parsed from CLI/config strings, e.g. "beta-vae",
// "ss-beta-tcvae", "ss-fvae-bb" (factor-vae + supervision + box loss).
struct Variant {
    enum class Base { beta_vae, beta_tcvae, dip_vae_i, factor_vae };
    Base base = Base::beta_vae;
    bool semi_supervised = false;
    bool bounding_box = false;

    static Variant parse(const std::string& name);
    std::string to_string() const;
    bool needs_discriminator() const { return base == Base::factor_vae; }
};

struct LatentCode {
    std::vector<float> mean;          // batch x m
    std::vector<float> log_variance;  // batch x m
    std::vector<float> sample;        // batch x m
    int batch = 0;
    int m = 0;
};

class ConvVae {
public:
    // Image sides must be equal powers of two >= 16; channels fixed at 3.
    ConvVae(int image_size, int channels, const TrainConfig& cfg, std::uint64_t init_seed);

    // Forward: epsilon has batch*m entries (pass zeros for mean encoding).
    LatentCode encode(const float* images, int batch, const float* epsilon);
    // Decoder forward from arbitrary z; returns logits (batch x image_numel).
    const float* decode(const float* z, int batch);
    // Pixel-space reconstruction, sigmoid(decode(z)).
    std::vector<float> generate(const float* z, int batch);

    // Backward through the whole model. dlogits is dL/d(decoder logits);
    // dmu/dlogvar/dz are direct loss gradients on the latent quantities
    // (any may be null). Parameter gradients accumulate into the layers.
    void backward(const float* dlogits, const float* dmu, const float* dlogvar,
                  const float* dz, int batch);

    std::vector<cdb::nn::ParamBlock*> params();
    void zero_grad() { enc_.zero_grad(); dec_.zero_grad(); }

    int image_size() const { return image_size_; }
    int channels() const { return channels_; }
    std::size_t image_numel() const {
        return static_cast<std::size_t>(channels_) * image_size_ * image_size_;
    }
    int latent_dim() const { return m_; }

private:
    int image_size_, channels_, m_;
    cdb::nn::Sequential enc_, dec_;
    // caches from the last encode() needed by backward()
    std::vector<float> eps_cache_, std_cache_, enc_out_grad_;
    LatentCode last_code_;
};

// FactorVAE discriminator: MLP on z emitting two logits
// (index 0 = "joint q(z)", index 1 = "product of marginals").
class Discriminator {
public:
    Discriminator(int latent_dim, int hidden, std::uint64_t init_seed);
    // Returns batch x 2 logits.
    const float* forward(const float* z, int batch);
    // dlogits is dL/d(output); returns dL/dz.
    const float* backward(const float* dlogits, int batch);
    std::vector<cdb::nn::ParamBlock*> params() { return net_.params(); }
    void zero_grad() { net_.zero_grad(); }

private:
    cdb::nn::Sequential net_;
};

// Per-factor linear softmax heads on the latent mean (semi-supervised term).
class SupervisedHeads {
public:
    SupervisedHeads(int latent_dim, const std::vector<int>& cardinalities,
                    std::uint64_t init_seed);
    // Cross-entropy summed over factors, averaged over the labeled rows.
    // labels: batch x n_factors value indices; labeled: batch flags.
    // Accumulates head parameter grads and writes dL/dmu (batch x m).
    float loss_and_grad(const float* mu, int batch, const std::vector<int>& labels,
                        const std::vector<char>& labeled, float weight, float* dmu);
    std::vector<cdb::nn::ParamBlock*> params();
    void zero_grad();
    std::size_t n_factors() const { return heads_.size(); }

private:
    int m_;
    std::vector<int> cards_;
    std::vector<cdb::nn::Dense> heads_;
};

}  // namespace cdb::models
