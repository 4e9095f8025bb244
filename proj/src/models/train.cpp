#include "cdb/models/train.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "cdb/datagen/render.hpp"
#include "cdb/models/checkpoint.hpp"
#include "cdb/models/losses.hpp"
#include "cdb/nn/adam.hpp"
#include "cdb/nn/tensor.hpp"
#include "cdb/scm/graph.hpp"

namespace cdb::models {

BatchDataset load_training_set(const datagen::DatasetManifest& manifest,
                               float supervision_fraction, std::uint64_t seed) {
    if (manifest.records.empty()) throw TrainError("manifest has no records");
    BatchDataset ds;
    ds.image_size = manifest.width;
    if (manifest.height != manifest.width)
        throw TrainError("training expects square images");
    ds.n = manifest.records.size();
    for (const auto& f : manifest.graph.factors) {
        ds.factor_names.push_back(f.name);
        ds.cardinalities.push_back(static_cast<int>(f.values.size()));
    }
    const std::size_t numel = ds.numel();
    ds.images.resize(numel * ds.n);
    ds.labels.resize(ds.n * ds.factor_names.size());
    ds.bounds.reserve(ds.n);
    for (std::size_t i = 0; i < ds.n; ++i) {
        const auto& rec = manifest.records[i];
        const auto img = datagen::read_png(manifest.image_file(rec));
        if (img.width != ds.image_size || img.height != ds.image_size)
            throw TrainError("record " + rec.id + ": image size mismatch");
        float* dst = ds.images.data() + i * numel;
        // HWC bytes -> CHW floats in [0,1]
        const int hw = ds.image_size * ds.image_size;
        for (int p = 0; p < hw; ++p)
            for (int c = 0; c < 3; ++c)
                dst[c * hw + p] = static_cast<float>(img.rgb[p * 3 + c]) / 255.0f;
        for (std::size_t f = 0; f < ds.factor_names.size(); ++f) {
            const auto& spec = manifest.graph.factors[f];
            const auto vi = spec.value_index(rec.assignment.at(spec.name));
            if (!vi) throw TrainError("record " + rec.id + ": unknown value for " + spec.name);
            ds.labels[i * ds.factor_names.size() + f] = static_cast<int>(*vi);
        }
        ds.bounds.push_back(rec.bounds);
    }
    // Deterministic labeled subset: shuffle indices, mark the first ceil(f*n).
    ds.labeled.assign(ds.n, 0);
    std::vector<std::size_t> idx(ds.n);
    std::iota(idx.begin(), idx.end(), 0);
    std::uint64_t rng = seed ^ 0x5b5ad4f1ce5b5b5bULL;
    for (std::size_t i = ds.n; i > 1; --i)
        std::swap(idx[i - 1], idx[scm::next_below(rng, i)]);
    const auto k = static_cast<std::size_t>(
        std::ceil(static_cast<double>(supervision_fraction) * static_cast<double>(ds.n)));
    for (std::size_t i = 0; i < std::min(k, ds.n); ++i) ds.labeled[idx[i]] = 1;
    return ds;
}

void fill_bb_mask(const datagen::Bounds& b, int image_size, int channels, float* mask) {
    const int hw = image_size * image_size;
    std::fill(mask, mask + static_cast<std::size_t>(channels) * hw, 0.0f);
    for (int y = b.y0; y < b.y1; ++y) {
        const int row = image_size - 1 - y;  // bounds use a bottom-left origin
        if (row < 0 || row >= image_size) continue;
        for (int x = std::max(0, b.x0); x < std::min(image_size, b.x1); ++x)
            for (int c = 0; c < channels; ++c) mask[c * hw + row * image_size + x] = 1.0f;
    }
}

std::vector<cdb::nn::ParamBlock*> ModelHandle::vae_params() {
    auto out = vae->params();
    if (heads)
        for (auto* p : heads->params()) out.push_back(p);
    return out;
}

ModelHandle make_model(const Variant& variant, const TrainConfig& cfg, int image_size,
                       int channels, const std::vector<int>& cardinalities) {
    cfg.validate();
    ModelHandle h;
    h.variant = variant;
    h.cfg = cfg;
    h.image_size = image_size;
    h.channels = channels;
    h.cardinalities = cardinalities;
    h.vae = std::make_unique<ConvVae>(image_size, channels, cfg, cfg.seed ^ 0xa02bdbf7bb3c0a7ULL);
    if (variant.needs_discriminator())
        h.disc = std::make_unique<Discriminator>(cfg.latent_dim, cfg.hidden_dim,
                                                 cfg.seed ^ 0x6a09e667f3bcc909ULL);
    if (variant.semi_supervised) {
        if (cardinalities.empty())
            throw ConfigError("semi-supervised variant requires factor cardinalities");
        h.heads = std::make_unique<SupervisedHeads>(cfg.latent_dim, cardinalities,
                                                    cfg.seed ^ 0xbb67ae8584caa73bULL);
    }
    return h;
}

namespace {

bool finite(double v) { return std::isfinite(v); }

void append_log(const std::string& path, const EpochLog& e) {
    if (path.empty()) return;
    nlohmann::json j{{"epoch", e.epoch},        {"total", e.total},
                     {"reconstruction", e.recon}, {"kl", e.kl},
                     {"regularizer", e.regularizer}, {"supervised", e.supervised},
                     {"bb", e.bb}};
    std::ofstream os(path, std::ios::app);
    os << j.dump() << "\n";
}

}  // namespace

TrainOutcome train_model(ModelHandle& handle, const BatchDataset& data,
                         const std::string& checkpoint_path, const std::string& log_path) {
    const TrainConfig& cfg = handle.cfg;
    if (data.image_size != handle.image_size)
        throw ShapeError("training set image size does not match model");
    if (handle.variant.bounding_box && data.bounds.size() != data.n)
        throw ConfigError("ss-fvae-bb requires bounds metadata for every record");

    const int B = std::min<int>(cfg.batch_size, static_cast<int>(data.n));
    const int m = cfg.latent_dim;
    const std::size_t numel = data.numel();
    const std::size_t nf = data.factor_names.size();

    cdb::nn::Adam vae_opt(handle.vae_params(), cfg.lr);
    std::unique_ptr<cdb::nn::Adam> disc_opt;
    if (handle.disc)
        disc_opt = std::make_unique<cdb::nn::Adam>(handle.disc->params(), cfg.disc_lr);

    if (handle.epochs_done > 0 && !checkpoint_path.empty()) {
        // resuming: restore optimizer state from the checkpoint on disk
        auto loaded = load_checkpoint(checkpoint_path);
        if (!loaded.vae_m1.empty()) {
            vae_opt.moment1() = loaded.vae_m1;
            vae_opt.moment2() = loaded.vae_m2;
            vae_opt.set_step_count(loaded.vae_opt_step);
        }
        if (disc_opt && !loaded.disc_m1.empty()) {
            disc_opt->moment1() = loaded.disc_m1;
            disc_opt->moment2() = loaded.disc_m2;
            disc_opt->set_step_count(loaded.disc_opt_step);
        }
    }
    if (handle.epochs_done == 0 && !checkpoint_path.empty())
        save_checkpoint(checkpoint_path, handle, &vae_opt, disc_opt.get());

    TrainOutcome out;
    std::vector<std::size_t> order(data.n);
    std::iota(order.begin(), order.end(), 0);

    std::vector<float> batch_x(numel * B), eps(static_cast<std::size_t>(B) * m);
    std::vector<float> dlogits(numel * B), dmu, dlogvar, dz;
    std::vector<float> mask, perm_z;
    std::vector<int> batch_labels(static_cast<std::size_t>(B) * nf);
    std::vector<char> batch_labeled(B);

    for (int epoch = handle.epochs_done; epoch < cfg.epochs; ++epoch) {
        // Restart from the identity permutation so the epoch's batch order
        // depends only on (seed, epoch) — required for bit-exact resume.
        std::iota(order.begin(), order.end(), 0);
        std::uint64_t shuffle_rng = cfg.seed + 0x9e3779b97f4a7c15ULL * (epoch + 1);
        for (std::size_t i = data.n; i > 1; --i)
            std::swap(order[i - 1], order[scm::next_below(shuffle_rng, i)]);
        std::uint64_t eps_rng = cfg.seed ^ (0xd1b54a32d192ed03ULL * (epoch + 1));

        EpochLog elog;
        elog.epoch = epoch + 1;
        int batches = 0;
        bool nan_hit = false;

        for (std::size_t start = 0; start + B <= data.n; start += B) {
            for (int b = 0; b < B; ++b) {
                const std::size_t r = order[start + b];
                std::copy_n(data.images.data() + r * numel, numel,
                            batch_x.data() + static_cast<std::size_t>(b) * numel);
                for (std::size_t f = 0; f < nf; ++f)
                    batch_labels[b * nf + f] = data.labels[r * nf + f];
                batch_labeled[b] = data.labeled.empty() ? 0 : data.labeled[r];
            }
            for (auto& e : eps) e = cdb::nn::randn(eps_rng);

            handle.vae->zero_grad();
            if (handle.heads) handle.heads->zero_grad();
            auto code = handle.vae->encode(batch_x.data(), B, eps.data());
            const float* logits = handle.vae->decode(code.sample.data(), B);

            std::fill(dlogits.begin(), dlogits.end(), 0.0f);
            dmu.assign(static_cast<std::size_t>(B) * m, 0.0f);
            dlogvar.assign(dmu.size(), 0.0f);
            dz.assign(dmu.size(), 0.0f);

            const double recon =
                bernoulli_recon(logits, batch_x.data(), B, numel, dlogits.data());
            double kl = 0.0, reg = 0.0, sup = 0.0, bb = 0.0;

            switch (handle.variant.base) {
                case Variant::Base::beta_vae:
                    kl = gaussian_kl(code.mean.data(), code.log_variance.data(), B, m,
                                     cfg.beta, dmu.data(), dlogvar.data());
                    reg = cfg.beta * kl;
                    break;
                case Variant::Base::beta_tcvae: {
                    const auto t = tcvae_terms(code.sample.data(), code.mean.data(),
                                               code.log_variance.data(), B, m, data.n, 1.0f,
                                               cfg.beta, 1.0f, dz.data(), dmu.data(),
                                               dlogvar.data());
                    kl = t.mutual_info + t.total_correlation + t.dim_kl;
                    reg = t.mutual_info + cfg.beta * t.total_correlation + t.dim_kl;
                    break;
                }
                case Variant::Base::dip_vae_i:
                    kl = gaussian_kl(code.mean.data(), code.log_variance.data(), B, m, 1.0f,
                                     dmu.data(), dlogvar.data());
                    reg = kl + dip_penalty(code.mean.data(), B, m, cfg.lambda_d,
                                           cfg.lambda_od, dmu.data());
                    break;
                case Variant::Base::factor_vae: {
                    kl = gaussian_kl(code.mean.data(), code.log_variance.data(), B, m, 1.0f,
                                     dmu.data(), dlogvar.data());
                    // VAE sees gamma * E[logit_joint - logit_marginal]; the
                    // discriminator's own gradients from this pass are discarded.
                    handle.disc->zero_grad();
                    const float* dl = handle.disc->forward(code.sample.data(), B);
                    double tc_est = 0.0;
                    std::vector<float> ddl(static_cast<std::size_t>(B) * 2, 0.0f);
                    for (int b = 0; b < B; ++b) {
                        tc_est += dl[b * 2] - dl[b * 2 + 1];
                        ddl[b * 2] = cfg.gamma / B;
                        ddl[b * 2 + 1] = -cfg.gamma / B;
                    }
                    tc_est /= B;
                    const float* dz_disc = handle.disc->backward(ddl.data(), B);
                    for (std::size_t i = 0; i < dz.size(); ++i) dz[i] += dz_disc[i];
                    handle.disc->zero_grad();
                    reg = kl + cfg.gamma * tc_est;
                    break;
                }
            }

            if (handle.heads)
                sup = handle.heads->loss_and_grad(code.mean.data(), B, batch_labels,
                                                  batch_labeled, cfg.supervised_weight,
                                                  dmu.data());
            if (handle.variant.bounding_box) {
                mask.resize(numel * B);
                for (int b = 0; b < B; ++b)
                    fill_bb_mask(data.bounds[order[start + b]], data.image_size, 3,
                                 mask.data() + static_cast<std::size_t>(b) * numel);
                bb = bb_penalty(logits, batch_x.data(), mask.data(), B, numel, cfg.lambda_bb,
                                dlogits.data());
            }

            const double total = recon + reg + sup + cfg.lambda_bb * bb;
            if (!finite(total)) {
                nan_hit = true;
                break;
            }

            handle.vae->backward(dlogits.data(), dmu.data(), dlogvar.data(), dz.data(), B);
            vae_opt.step();

            if (handle.disc) {
                // Discriminator step: joint codes (class 0) vs per-dimension
                // permuted codes (class 1), fresh permutation per dimension.
                std::uint64_t perm_rng = eps_rng ^ 0x94d049bb133111ebULL;
                perm_z.assign(code.sample.begin(), code.sample.end());
                std::vector<int> pidx(B);
                for (int d = 0; d < m; ++d) {
                    std::iota(pidx.begin(), pidx.end(), 0);
                    for (int i = B; i > 1; --i)
                        std::swap(pidx[i - 1], pidx[scm::next_below(perm_rng, i)]);
                    for (int b = 0; b < B; ++b)
                        perm_z[static_cast<std::size_t>(b) * m + d] =
                            code.sample[static_cast<std::size_t>(pidx[b]) * m + d];
                }
                handle.disc->zero_grad();
                std::vector<float> ddl(static_cast<std::size_t>(B) * 2, 0.0f);
                for (int pass = 0; pass < 2; ++pass) {
                    const float* zin = pass == 0 ? code.sample.data() : perm_z.data();
                    const int label = pass;
                    const float* dl = handle.disc->forward(zin, B);
                    std::fill(ddl.begin(), ddl.end(), 0.0f);
                    for (int b = 0; b < B; ++b)
                        softmax_xent(dl + b * 2, 2, label, 0.5f / B, ddl.data() + b * 2,
                                     nullptr);
                    handle.disc->backward(ddl.data(), B);
                }
                disc_opt->step();
            }

            elog.total += total;
            elog.recon += recon;
            elog.kl += kl;
            elog.regularizer += reg;
            elog.supervised += sup;
            elog.bb += bb;
            ++batches;
        }

        if (nan_hit) {
            out.aborted_nan = true;
            break;  // last-good checkpoint stays on disk
        }
        if (batches > 0) {
            elog.total /= batches;
            elog.recon /= batches;
            elog.kl /= batches;
            elog.regularizer /= batches;
            elog.supervised /= batches;
            elog.bb /= batches;
        }
        out.log.push_back(elog);
        append_log(log_path, elog);
        handle.epochs_done = epoch + 1;
        if (!checkpoint_path.empty())
            save_checkpoint(checkpoint_path, handle, &vae_opt, disc_opt.get());
    }
    return out;
}

}  // namespace cdb::models
