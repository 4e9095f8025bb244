#include "cdb/models/losses.hpp"

#include <algorithm>
#include <cmath>

namespace cdb::models {

namespace {

inline double softplus(double v) {
    if (v > 30.0) return v;
    return std::log1p(std::exp(v));
}
inline double sigmoidd(double v) { return 1.0 / (1.0 + std::exp(-v)); }

// log N(z; mu, exp(lv)) for one dimension
inline double log_gauss(double z, double mu, double lv) {
    const double d = z - mu;
    return -0.5 * (lv + d * d / std::exp(lv) + 1.8378770664093453);  // log(2*pi)
}

}  // namespace

double bernoulli_recon(const float* logits, const float* x, int batch, std::size_t numel,
                       float* dlogits) {
    const double inv_b = 1.0 / batch;
    double total = 0.0;
    const std::size_t n = numel * batch;
    for (std::size_t i = 0; i < n; ++i) {
        const double l = logits[i];
        total += softplus(l) - static_cast<double>(x[i]) * l;
        if (dlogits) dlogits[i] += static_cast<float>((sigmoidd(l) - x[i]) * inv_b);
    }
    return total * inv_b;
}

double gaussian_kl(const float* mu, const float* logvar, int batch, int m, float weight,
                   float* dmu, float* dlogvar) {
    const double inv_b = 1.0 / batch;
    double total = 0.0;
    const std::size_t n = static_cast<std::size_t>(batch) * m;
    for (std::size_t i = 0; i < n; ++i) {
        const double mv = mu[i], lv = logvar[i], var = std::exp(lv);
        total += 0.5 * (mv * mv + var - 1.0 - lv);
        if (dmu) dmu[i] += static_cast<float>(weight * mv * inv_b);
        if (dlogvar) dlogvar[i] += static_cast<float>(weight * 0.5 * (var - 1.0) * inv_b);
    }
    return total * inv_b;
}

double bb_penalty(const float* logits, const float* x, const float* w, int batch,
                  std::size_t numel, float weight, float* dlogits) {
    const double inv_b = 1.0 / batch;
    double total = 0.0;
    const std::size_t n = numel * batch;
    for (std::size_t i = 0; i < n; ++i) {
        if (w[i] == 0.0f) continue;
        const double xh = sigmoidd(logits[i]);
        const double d = xh - x[i];
        total += d * d;
        if (dlogits)
            dlogits[i] += static_cast<float>(weight * 2.0 * d * xh * (1.0 - xh) * inv_b);
    }
    return total * inv_b;
}

double bb_reconstruction_penalty(const float* x, const float* xhat, const float* w,
                                 std::size_t numel) {
    double total = 0.0;
    for (std::size_t i = 0; i < numel; ++i) {
        const double d = (static_cast<double>(x[i]) - xhat[i]) * w[i];
        total += d * d;
    }
    return total;
}

TcTerms tcvae_terms(const float* z, const float* mu, const float* logvar, int batch, int m,
                    std::size_t dataset_size, float mi_w, float tc_w, float dkl_w, float* dz,
                    float* dmu, float* dlogvar) {
    // Minibatch-weighted sampling: for each sample i,
    //   log q(z_i)   ~= logsumexp_j sum_d logN(z_id; mu_jd, var_jd) - log(B*L)
    //   log q(z_id)  ~= logsumexp_j logN(z_id; mu_jd, var_jd)       - log(B*L)
    //   log q(z_i|x_i) = sum_d logN(z_id; mu_id, var_id)
    // MI = E[log q(z|x) - log q(z)], TC = E[log q(z) - sum_d log q(z_d)],
    // dimKL = E[sum_d log q(z_d) - log p(z)].
    const int B = batch;
    const double log_bl = std::log(static_cast<double>(B) * dataset_size);
    const double inv_b = 1.0 / B;

    // pairwise per-dim log densities: ld[i][j][d] (B*B*m) — B<=64, m<=64: fits.
    std::vector<double> ld(static_cast<std::size_t>(B) * B * m);
    for (int i = 0; i < B; ++i)
        for (int j = 0; j < B; ++j)
            for (int d = 0; d < m; ++d)
                ld[(static_cast<std::size_t>(i) * B + j) * m + d] =
                    log_gauss(z[i * m + d], mu[j * m + d], logvar[j * m + d]);

    TcTerms out;
    std::vector<double> row(B), wfull(static_cast<std::size_t>(B) * B);
    std::vector<double> wdim(static_cast<std::size_t>(B) * B * m);
    double sum_logqzx = 0.0, sum_logqz = 0.0, sum_logqzd = 0.0, sum_logpz = 0.0;

    for (int i = 0; i < B; ++i) {
        // joint: row_j = sum_d ld[i][j][d]
        double mx = -1e300;
        for (int j = 0; j < B; ++j) {
            double s = 0.0;
            const double* base = &ld[(static_cast<std::size_t>(i) * B + j) * m];
            for (int d = 0; d < m; ++d) s += base[d];
            row[j] = s;
            mx = std::max(mx, s);
        }
        double se = 0.0;
        for (int j = 0; j < B; ++j) se += std::exp(row[j] - mx);
        const double lse = mx + std::log(se);
        sum_logqz += lse - log_bl;
        for (int j = 0; j < B; ++j)
            wfull[static_cast<std::size_t>(i) * B + j] = std::exp(row[j] - lse);

        // per-dim marginals
        for (int d = 0; d < m; ++d) {
            double mxd = -1e300;
            for (int j = 0; j < B; ++j)
                mxd = std::max(mxd, ld[(static_cast<std::size_t>(i) * B + j) * m + d]);
            double sed = 0.0;
            for (int j = 0; j < B; ++j)
                sed += std::exp(ld[(static_cast<std::size_t>(i) * B + j) * m + d] - mxd);
            const double lsed = mxd + std::log(sed);
            sum_logqzd += lsed - log_bl;
            for (int j = 0; j < B; ++j)
                wdim[(static_cast<std::size_t>(i) * B + j) * m + d] =
                    std::exp(ld[(static_cast<std::size_t>(i) * B + j) * m + d] - lsed);
        }

        // conditional and prior
        for (int d = 0; d < m; ++d) {
            sum_logqzx += ld[(static_cast<std::size_t>(i) * B + i) * m + d];
            const double zid = z[i * m + d];
            sum_logpz += -0.5 * (zid * zid + 1.8378770664093453);
        }
    }

    out.mutual_info = (sum_logqzx - sum_logqz) * inv_b;
    out.total_correlation = (sum_logqz - sum_logqzd) * inv_b;
    out.dim_kl = (sum_logqzd - sum_logpz) * inv_b;

    if (!dz && !dmu && !dlogvar) return out;

    // Effective weights on the four log terms inside the batch average:
    //   a_qzx = mi_w;  a_qz = tc_w - mi_w;  a_qzd = dkl_w - tc_w;  a_pz = -dkl_w
    const double a_qzx = mi_w, a_qz = tc_w - mi_w, a_qzd = dkl_w - tc_w, a_pz = -dkl_w;

    auto add_gauss_grads = [&](int i, int j, int d, double coeff) {
        // d logN(z_id; mu_jd, lv_jd) contributions
        const std::size_t zi = static_cast<std::size_t>(i) * m + d;
        const std::size_t pj = static_cast<std::size_t>(j) * m + d;
        const double var = std::exp(static_cast<double>(logvar[pj]));
        const double diff = z[zi] - mu[pj];
        if (dz) dz[zi] += static_cast<float>(coeff * (-diff / var));
        if (dmu) dmu[pj] += static_cast<float>(coeff * (diff / var));
        if (dlogvar)
            dlogvar[pj] += static_cast<float>(coeff * 0.5 * (diff * diff / var - 1.0));
    };

    for (int i = 0; i < B; ++i) {
        for (int d = 0; d < m; ++d) {
            // conditional term (j == i only)
            add_gauss_grads(i, i, d, a_qzx * inv_b);
            // prior term: d/dz -0.5 z^2 = -z
            if (dz) dz[i * m + d] += static_cast<float>(a_pz * inv_b * (-z[i * m + d]));
        }
        for (int j = 0; j < B; ++j) {
            const double wf = wfull[static_cast<std::size_t>(i) * B + j];
            for (int d = 0; d < m; ++d) {
                const double wd = wdim[(static_cast<std::size_t>(i) * B + j) * m + d];
                const double coeff = (a_qz * wf + a_qzd * wd) * inv_b;
                if (coeff != 0.0) add_gauss_grads(i, j, d, coeff);
            }
        }
    }
    return out;
}

double dip_penalty(const float* mu, int batch, int m, float lambda_d, float lambda_od,
                   float* dmu) {
    const int B = batch;
    std::vector<double> mean(m, 0.0);
    for (int b = 0; b < B; ++b)
        for (int d = 0; d < m; ++d) mean[d] += mu[b * m + d];
    for (int d = 0; d < m; ++d) mean[d] /= B;

    std::vector<double> cov(static_cast<std::size_t>(m) * m, 0.0);
    for (int b = 0; b < B; ++b)
        for (int i = 0; i < m; ++i) {
            const double ci = mu[b * m + i] - mean[i];
            for (int j = 0; j < m; ++j)
                cov[static_cast<std::size_t>(i) * m + j] += ci * (mu[b * m + j] - mean[j]);
        }
    for (auto& c : cov) c /= B;

    double pen = 0.0;
    std::vector<double> dcov(cov.size());
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) {
            const double c = cov[static_cast<std::size_t>(i) * m + j];
            if (i == j) {
                pen += lambda_d * (c - 1.0) * (c - 1.0);
                dcov[static_cast<std::size_t>(i) * m + j] = 2.0 * lambda_d * (c - 1.0);
            } else {
                pen += lambda_od * c * c;
                dcov[static_cast<std::size_t>(i) * m + j] = 2.0 * lambda_od * c;
            }
        }

    if (dmu) {
        // dPen/dmu_bi = (2/B) * sum_j S_ij * (mu_bj - mean_j) with S = (dcov+dcov^T)/2;
        // dcov here is already symmetric.
        for (int b = 0; b < B; ++b)
            for (int i = 0; i < m; ++i) {
                double s = 0.0;
                for (int j = 0; j < m; ++j)
                    s += dcov[static_cast<std::size_t>(i) * m + j] * (mu[b * m + j] - mean[j]);
                dmu[b * m + i] += static_cast<float>(2.0 / B * s);
            }
    }
    return pen;
}

double softmax_xent(const float* logits, int n, int label, float weight, float* dlogits,
                    float* probs_out) {
    double mx = logits[0];
    for (int i = 1; i < n; ++i) mx = std::max(mx, static_cast<double>(logits[i]));
    double se = 0.0;
    for (int i = 0; i < n; ++i) se += std::exp(logits[i] - mx);
    const double lse = mx + std::log(se);
    for (int i = 0; i < n; ++i) {
        const double p = std::exp(logits[i] - lse);
        if (probs_out) probs_out[i] = static_cast<float>(p);
        if (dlogits)
            dlogits[i] += static_cast<float>(weight * (p - (i == label ? 1.0 : 0.0)));
    }
    return lse - logits[label];
}

}  // namespace cdb::models
