#include "cdb/models/vae.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <json.hpp>

#include "cdb/common/hash.hpp"
#include "cdb/models/losses.hpp"

namespace cdb::models {

using cdb::nn::Activation;
using cdb::nn::Conv2d;
using cdb::nn::ConvTranspose2d;
using cdb::nn::Dense;

void TrainConfig::validate() const {
    if (batch_size <= 0 || latent_dim <= 0 || epochs < 0 || base_channels <= 0 ||
        hidden_dim <= 0)
        throw ConfigError("train config: sizes must be positive");
    if (beta <= 0 || gamma <= 0 || lambda_d <= 0 || lambda_od <= 0 || supervised_weight <= 0 ||
        lambda_bb <= 0 || lr <= 0 || disc_lr <= 0)
        throw ConfigError("train config: weights and rates must be positive");
    if (supervision_fraction < 0.0f || supervision_fraction > 1.0f)
        throw ConfigError("train config: supervision_fraction must lie in [0,1]");
}

std::string TrainConfig::canonical_json() const {
    nlohmann::json j;
    j["batch_size"] = batch_size;
    j["latent_dim"] = latent_dim;
    j["beta"] = beta;
    j["gamma"] = gamma;
    j["lambda_d"] = lambda_d;
    j["lambda_od"] = lambda_od;
    j["supervised_weight"] = supervised_weight;
    j["supervision_fraction"] = supervision_fraction;
    j["lambda_bb"] = lambda_bb;
    j["epochs"] = epochs;
    j["lr"] = lr;
    j["disc_lr"] = disc_lr;
    j["base_channels"] = base_channels;
    j["hidden_dim"] = hidden_dim;
    j["seed"] = seed;
    return j.dump();
}

std::uint64_t TrainConfig::hash() const { return fnv1a64(canonical_json()); }

Variant Variant::parse(const std::string& name) {
    Variant v;
    std::string rest = name;
    if (name == "ss-fvae-bb") {
        v.base = Base::factor_vae;
        v.semi_supervised = true;
        v.bounding_box = true;
        return v;
    }
    if (rest.rfind("ss-", 0) == 0) {
        v.semi_supervised = true;
        rest = rest.substr(3);
    }
    if (rest == "beta-vae")
        v.base = Base::beta_vae;
    else if (rest == "beta-tcvae")
        v.base = Base::beta_tcvae;
    else if (rest == "dip-vae-i")
        v.base = Base::dip_vae_i;
    else if (rest == "factor-vae" || rest == "fvae")
        v.base = Base::factor_vae;
    else
        throw ConfigError("unknown model variant: " + name);
    return v;
}

std::string Variant::to_string() const {
    if (bounding_box) return "ss-fvae-bb";
    std::string base;
    switch (this->base) {
        case Base::beta_vae: base = "beta-vae"; break;
        case Base::beta_tcvae: base = "beta-tcvae"; break;
        case Base::dip_vae_i: base = "dip-vae-i"; break;
        case Base::factor_vae: base = "factor-vae"; break;
    }
    return semi_supervised ? "ss-" + base : base;
}

namespace {

int stage_channels(int base, int s) { return s < 2 ? base : 2 * base; }

}  // namespace

ConvVae::ConvVae(int image_size, int channels, const TrainConfig& cfg, std::uint64_t init_seed)
    : image_size_(image_size), channels_(channels), m_(cfg.latent_dim) {
    if (channels != 3) throw ShapeError("model expects 3-channel images");
    int stages = 0, s = image_size;
    while (s > 4 && s % 2 == 0) {
        s /= 2;
        ++stages;
    }
    if (s != 4 || stages < 2)
        throw ShapeError("image size must be 4*2^k with k>=2, got " +
                         std::to_string(image_size));

    std::uint64_t rng = init_seed;
    int in_c = channels, side = image_size;
    std::vector<int> chans;
    for (int st = 0; st < stages; ++st) {
        const int out_c = stage_channels(cfg.base_channels, st);
        enc_.add(std::make_unique<Conv2d>(in_c, side, side, out_c, 4, 2, 1, Activation::relu,
                                          rng));
        chans.push_back(out_c);
        in_c = out_c;
        side /= 2;
    }
    const int flat = in_c * side * side;
    enc_.add(std::make_unique<Dense>(flat, cfg.hidden_dim, Activation::relu, rng));
    enc_.add(std::make_unique<Dense>(cfg.hidden_dim, 2 * m_, Activation::none, rng));

    dec_.add(std::make_unique<Dense>(m_, cfg.hidden_dim, Activation::relu, rng));
    dec_.add(std::make_unique<Dense>(cfg.hidden_dim, flat, Activation::relu, rng));
    int dc = in_c, dside = side;
    for (int st = stages - 1; st >= 0; --st) {
        const int out_c = st == 0 ? channels : chans[st - 1];
        const Activation act = st == 0 ? Activation::none : Activation::relu;
        dec_.add(std::make_unique<ConvTranspose2d>(dc, dside, dside, out_c, 4, 2, 1, act, rng));
        dc = out_c;
        dside *= 2;
    }
}

LatentCode ConvVae::encode(const float* images, int batch, const float* epsilon) {
    const float* out = enc_.forward(images, batch);
    LatentCode code;
    code.batch = batch;
    code.m = m_;
    code.mean.resize(static_cast<std::size_t>(batch) * m_);
    code.log_variance.resize(code.mean.size());
    code.sample.resize(code.mean.size());
    eps_cache_.assign(epsilon, epsilon + code.mean.size());
    std_cache_.resize(code.mean.size());
    for (int b = 0; b < batch; ++b)
        for (int d = 0; d < m_; ++d) {
            const std::size_t i = static_cast<std::size_t>(b) * m_ + d;
            code.mean[i] = out[static_cast<std::size_t>(b) * 2 * m_ + d];
            float lv = out[static_cast<std::size_t>(b) * 2 * m_ + m_ + d];
            lv = std::clamp(lv, -8.0f, 8.0f);
            code.log_variance[i] = lv;
            std_cache_[i] = std::exp(0.5f * lv);
            code.sample[i] = code.mean[i] + std_cache_[i] * epsilon[i];
        }
    last_code_ = code;
    return code;
}

const float* ConvVae::decode(const float* z, int batch) { return dec_.forward(z, batch); }

std::vector<float> ConvVae::generate(const float* z, int batch) {
    const float* logits = decode(z, batch);
    std::vector<float> img(image_numel() * batch);
    for (std::size_t i = 0; i < img.size(); ++i)
        img[i] = 1.0f / (1.0f + std::exp(-logits[i]));
    return img;
}

void ConvVae::backward(const float* dlogits, const float* dmu, const float* dlogvar,
                       const float* dz, int batch) {
    const std::size_t n = static_cast<std::size_t>(batch) * m_;
    std::vector<float> dz_total(n, 0.0f);
    if (dz)
        for (std::size_t i = 0; i < n; ++i) dz_total[i] = dz[i];
    if (dlogits) {
        const float* dz_dec = dec_.backward(dlogits, batch);
        for (std::size_t i = 0; i < n; ++i) dz_total[i] += dz_dec[i];
    }
    enc_out_grad_.assign(static_cast<std::size_t>(batch) * 2 * m_, 0.0f);
    for (int b = 0; b < batch; ++b)
        for (int d = 0; d < m_; ++d) {
            const std::size_t i = static_cast<std::size_t>(b) * m_ + d;
            float g_mu = dz_total[i];
            float g_lv = dz_total[i] * eps_cache_[i] * 0.5f * std_cache_[i];
            if (dmu) g_mu += dmu[i];
            if (dlogvar) g_lv += dlogvar[i];
            enc_out_grad_[static_cast<std::size_t>(b) * 2 * m_ + d] = g_mu;
            enc_out_grad_[static_cast<std::size_t>(b) * 2 * m_ + m_ + d] = g_lv;
        }
    enc_.backward(enc_out_grad_.data(), batch);
}

std::vector<cdb::nn::ParamBlock*> ConvVae::params() {
    auto out = enc_.params();
    for (auto* p : dec_.params()) out.push_back(p);
    return out;
}

Discriminator::Discriminator(int latent_dim, int hidden, std::uint64_t init_seed) {
    std::uint64_t rng = init_seed;
    net_.add(std::make_unique<Dense>(latent_dim, hidden, Activation::relu, rng));
    net_.add(std::make_unique<Dense>(hidden, hidden, Activation::relu, rng));
    net_.add(std::make_unique<Dense>(hidden, 2, Activation::none, rng));
}

const float* Discriminator::forward(const float* z, int batch) {
    return net_.forward(z, batch);
}

const float* Discriminator::backward(const float* dlogits, int batch) {
    return net_.backward(dlogits, batch);
}

SupervisedHeads::SupervisedHeads(int latent_dim, const std::vector<int>& cardinalities,
                                 std::uint64_t init_seed)
    : m_(latent_dim), cards_(cardinalities) {
    std::uint64_t rng = init_seed;
    heads_.reserve(cards_.size());
    for (int c : cards_) heads_.emplace_back(latent_dim, c, Activation::none, rng);
}

float SupervisedHeads::loss_and_grad(const float* mu, int batch, const std::vector<int>& labels,
                                     const std::vector<char>& labeled, float weight,
                                     float* dmu) {
    int labeled_count = 0;
    for (int b = 0; b < batch; ++b) labeled_count += labeled[b] ? 1 : 0;
    if (labeled_count == 0) return 0.0f;
    const float scale = weight / static_cast<float>(labeled_count);
    double total = 0.0;
    const std::size_t nf = heads_.size();
    for (std::size_t f = 0; f < nf; ++f) {
        const float* logits = heads_[f].forward(mu, batch);
        std::vector<float> dlog(static_cast<std::size_t>(cards_[f]) * batch, 0.0f);
        for (int b = 0; b < batch; ++b) {
            if (!labeled[b]) continue;
            total += softmax_xent(logits + static_cast<std::size_t>(b) * cards_[f], cards_[f],
                                  labels[static_cast<std::size_t>(b) * nf + f], scale,
                                  dlog.data() + static_cast<std::size_t>(b) * cards_[f],
                                  nullptr);
        }
        const float* dx = heads_[f].backward(dlog.data(), batch);
        for (std::size_t i = 0; i < static_cast<std::size_t>(batch) * m_; ++i) dmu[i] += dx[i];
    }
    return static_cast<float>(total * weight / labeled_count);
}

std::vector<cdb::nn::ParamBlock*> SupervisedHeads::params() {
    std::vector<cdb::nn::ParamBlock*> out;
    for (auto& h : heads_)
        for (auto* p : h.params()) out.push_back(p);
    return out;
}

void SupervisedHeads::zero_grad() {
    for (auto& h : heads_) h.zero_grad();
}

}  // namespace cdb::models
