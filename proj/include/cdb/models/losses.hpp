#pragma once

// Loss terms for the VAE zoo. Every function returns the (batch-averaged)
// term value and accumulates analytic gradients into caller buffers, so the
// trainer composes variants by summing contributions before one backward
// pass through the backbone.

#include <cstddef>
#include <vector>

namespace cdb::models {

// Bernoulli reconstruction from decoder logits:
//   sum_pixels softplus(logit) - x * logit   (== -log p(x|z), x in [0,1])
// averaged over the batch. dlogits += (sigmoid(logit) - x) / batch.
double bernoulli_recon(const float* logits, const float* x, int batch, std::size_t numel,
                       float* dlogits);

// Analytic KL(q(z|x) || N(0,I)) summed over dims, averaged over batch.
// dmu += weight * mu / batch; dlogvar += weight * 0.5*(exp(lv)-1) / batch.
double gaussian_kl(const float* mu, const float* logvar, int batch, int m, float weight,
                   float* dmu, float* dlogvar);

// ||x .* w - xhat .* w||_2^2 summed over the batch, averaged over batch.
// xhat = sigmoid(logits); dlogits += weight * 2(xhat-x) .* w .* xhat(1-xhat) / batch.
double bb_penalty(const float* logits, const float* x, const float* w, int batch,
                  std::size_t numel, float weight, float* dlogits);
// Value-only variant on pixel-space tensors (the spec-level operation).
double bb_reconstruction_penalty(const float* x, const float* xhat, const float* w,
                                 std::size_t numel);

struct TcTerms {
    double mutual_info = 0.0;
    double total_correlation = 0.0;
    double dim_kl = 0.0;
};

// beta-TCVAE decomposition with minibatch-weighted sampling over the batch
// itself (dataset_size = L). Adds
//   mi_w * MI + tc_w * TC + dkl_w * dimKL
// gradients into dz/dmu/dlogvar (all batch x m).
TcTerms tcvae_terms(const float* z, const float* mu, const float* logvar, int batch, int m,
                    std::size_t dataset_size, float mi_w, float tc_w, float dkl_w, float* dz,
                    float* dmu, float* dlogvar);

// DIP-VAE-I moment penalty on Cov(mu):
//   lambda_od * sum_{i!=j} C_ij^2 + lambda_d * sum_i (C_ii - 1)^2.
// Gradient accumulates into dmu.
double dip_penalty(const float* mu, int batch, int m, float lambda_d, float lambda_od,
                   float* dmu);

// Softmax cross-entropy for a single row of logits; writes prob vector and
// returns -log p[label]. dlogits += weight * (p - onehot(label)).
double softmax_xent(const float* logits, int n, int label, float weight, float* dlogits,
                    float* probs_out);

}  // namespace cdb::models
