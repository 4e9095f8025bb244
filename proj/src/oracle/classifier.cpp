#include "cdb/oracle/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "cdb/common/hash.hpp"
#include "cdb/models/losses.hpp"
#include "cdb/nn/adam.hpp"
#include "cdb/scm/graph.hpp"

namespace cdb::oracle {

using cdb::nn::Activation;
using cdb::nn::Conv2d;
using cdb::nn::Dense;

std::uint64_t schema_hash(const scm::CausalGraphSpec& graph) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const auto& f : graph.factors) {
        h = fnv1a64(f.name, h);
        h = fnv1a64("\x1f", h);
        for (const auto& v : f.values) {
            h = fnv1a64(v, h);
            h = fnv1a64("\x1e", h);
        }
    }
    return h;
}

ClassifierHandle::ClassifierHandle(int image_size,
                                   const std::vector<std::string>& factor_names,
                                   const std::vector<std::vector<std::string>>& factor_values,
                                   std::uint64_t schema, const ClassifierConfig& cfg)
    : image_size_(image_size), factor_names_(factor_names), factor_values_(factor_values),
      schema_(schema), cfg_(cfg) {
    if (image_size < 16 || image_size % 8 != 0)
        throw OracleError("classifier expects image sides divisible by 8, >= 16");
    std::uint64_t rng = cfg.seed ^ 0x3c6ef372fe94f82bULL;
    const int c = cfg.base_channels;
    int side = image_size;
    trunk_.add(std::make_unique<Conv2d>(3, side, side, c, 4, 2, 1, Activation::relu, rng));
    trunk_.add(std::make_unique<Conv2d>(c, side / 2, side / 2, 2 * c, 4, 2, 1,
                                        Activation::relu, rng));
    trunk_.add(std::make_unique<Conv2d>(2 * c, side / 4, side / 4, 2 * c, 4, 2, 1,
                                        Activation::relu, rng));
    const int flat = 2 * c * (side / 8) * (side / 8);
    trunk_.add(std::make_unique<Dense>(flat, cfg.hidden_dim, Activation::relu, rng));
    heads_.reserve(factor_values_.size());
    for (const auto& vals : factor_values_)
        heads_.emplace_back(cfg.hidden_dim, static_cast<int>(vals.size()), Activation::none,
                            rng);
}

int ClassifierHandle::output_width() const {
    int w = 0;
    for (const auto& vals : factor_values_) w += static_cast<int>(vals.size());
    return w;
}

std::vector<cdb::nn::ParamBlock*> ClassifierHandle::all_params() {
    auto out = trunk_.params();
    for (auto& h : heads_)
        for (auto* p : h.params()) out.push_back(p);
    return out;
}

std::vector<std::vector<float>> ClassifierHandle::predict_batch(const float* images,
                                                                int batch) const {
    const float* feat = trunk_.forward(images, batch);
    std::vector<std::vector<float>> out(heads_.size());
    for (std::size_t f = 0; f < heads_.size(); ++f) {
        const int card = static_cast<int>(factor_values_[f].size());
        const float* logits = heads_[f].forward(feat, batch);
        out[f].resize(static_cast<std::size_t>(card) * batch);
        for (int b = 0; b < batch; ++b) {
            const float* row = logits + static_cast<std::size_t>(b) * card;
            float mx = row[0];
            for (int i = 1; i < card; ++i) mx = std::max(mx, row[i]);
            double se = 0;
            for (int i = 0; i < card; ++i) se += std::exp(row[i] - mx);
            for (int i = 0; i < card; ++i)
                out[f][static_cast<std::size_t>(b) * card + i] =
                    static_cast<float>(std::exp(row[i] - mx) / se);
        }
    }
    return out;
}

FactorProbabilities ClassifierHandle::predict(const float* image, int image_size) const {
    if (image_size != image_size_)
        throw OracleError("image size does not match classifier training shape");
    auto batch = predict_batch(image, 1);
    FactorProbabilities fp;
    for (std::size_t f = 0; f < factor_names_.size(); ++f) fp.probs[factor_names_[f]] = batch[f];
    return fp;
}

ClassifierHandle train_classifier(const models::BatchDataset& data,
                                  const scm::CausalGraphSpec& graph,
                                  const ClassifierConfig& cfg) {
    if (data.n == 0) throw OracleError("empty training set");
    const std::size_t nf = data.factor_names.size();
    std::vector<std::vector<std::string>> values;
    for (const auto& f : graph.factors) values.push_back(f.values);
    if (values.size() != nf) throw OracleError("graph factors do not match dataset labels");

    ClassifierHandle handle(data.image_size, data.factor_names, values, schema_hash(graph),
                            cfg);

    // Deterministic holdout split.
    std::vector<std::size_t> idx(data.n);
    std::iota(idx.begin(), idx.end(), 0);
    std::uint64_t rng = cfg.seed ^ 0xa54ff53a5f1d36f1ULL;
    for (std::size_t i = data.n; i > 1; --i)
        std::swap(idx[i - 1], idx[scm::next_below(rng, i)]);
    const auto n_hold = std::min<std::size_t>(
        data.n - 1, static_cast<std::size_t>(std::lround(cfg.holdout_fraction * data.n)));
    std::vector<std::size_t> hold(idx.begin(), idx.begin() + n_hold);
    std::vector<std::size_t> train(idx.begin() + n_hold, idx.end());

    for (std::size_t f = 0; f < nf; ++f) {
        std::vector<char> seen(values[f].size(), 0);
        for (std::size_t r : train) seen[data.labels[r * nf + f]] = 1;
        if (std::count(seen.begin(), seen.end(), char(1)) < 2)
            throw DegenerateFactorError("factor " + data.factor_names[f] +
                                        " has fewer than two values in the training split");
    }

    cdb::nn::Adam opt(handle.all_params(), cfg.lr);
    const int B = std::min<int>(cfg.batch_size, static_cast<int>(train.size()));
    const std::size_t numel = data.numel();
    std::vector<float> batch_x(numel * B);
    std::vector<float> dfeat;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::uint64_t srng = cfg.seed + 0x9e3779b97f4a7c15ULL * (epoch + 1);
        std::vector<std::size_t> order(train);
        for (std::size_t i = order.size(); i > 1; --i)
            std::swap(order[i - 1], order[scm::next_below(srng, i)]);
        for (std::size_t start = 0; start + B <= order.size(); start += B) {
            for (int b = 0; b < B; ++b)
                std::copy_n(data.images.data() + order[start + b] * numel, numel,
                            batch_x.data() + static_cast<std::size_t>(b) * numel);
            handle.trunk_.zero_grad();
            for (auto& h : handle.heads_) h.zero_grad();
            const float* feat = handle.trunk_.forward(batch_x.data(), B);
            dfeat.assign(static_cast<std::size_t>(cfg.hidden_dim) * B, 0.0f);
            for (std::size_t f = 0; f < nf; ++f) {
                const int card = static_cast<int>(values[f].size());
                const float* logits = handle.heads_[f].forward(feat, B);
                std::vector<float> dl(static_cast<std::size_t>(card) * B, 0.0f);
                for (int b = 0; b < B; ++b)
                    models::softmax_xent(logits + static_cast<std::size_t>(b) * card, card,
                                         data.labels[order[start + b] * nf + f], 1.0f / B,
                                         dl.data() + static_cast<std::size_t>(b) * card,
                                         nullptr);
                const float* dx = handle.heads_[f].backward(dl.data(), B);
                for (std::size_t i = 0; i < dfeat.size(); ++i) dfeat[i] += dx[i];
            }
            handle.trunk_.backward(dfeat.data(), B);
            opt.step();
        }
    }

    // Held-out accuracy (falls back to training rows when the set is tiny).
    const auto& eval_rows = hold.empty() ? train : hold;
    std::vector<std::size_t> correct(nf, 0);
    for (std::size_t r : eval_rows) {
        auto probs = handle.predict_batch(data.images.data() + r * numel, 1);
        for (std::size_t f = 0; f < nf; ++f) {
            const auto& p = probs[f];
            const auto am = std::max_element(p.begin(), p.end()) - p.begin();
            if (am == data.labels[r * nf + f]) ++correct[f];
        }
    }
    for (std::size_t f = 0; f < nf; ++f)
        handle.val_accuracy_[data.factor_names[f]] =
            static_cast<double>(correct[f]) / static_cast<double>(eval_rows.size());
    return handle;
}

namespace {
void write_u32(std::ostream& os, std::uint32_t v) { os.write(reinterpret_cast<char*>(&v), 4); }
void write_u64(std::ostream& os, std::uint64_t v) { os.write(reinterpret_cast<char*>(&v), 8); }
std::uint32_t read_u32(std::istream& is) {
    std::uint32_t v = 0;
    is.read(reinterpret_cast<char*>(&v), 4);
    return v;
}
std::uint64_t read_u64(std::istream& is) {
    std::uint64_t v = 0;
    is.read(reinterpret_cast<char*>(&v), 8);
    return v;
}
constexpr char kMagic[8] = {'C', 'D', 'B', 'O', 'R', 'C', 'L', '1'};
}  // namespace

void ClassifierHandle::save(const std::string& path) const {
    namespace fs = std::filesystem;
    const fs::path target(path);
    if (target.has_parent_path()) fs::create_directories(target.parent_path());
    nlohmann::json meta;
    meta["image_size"] = image_size_;
    meta["factors"] = nlohmann::json::array();
    for (std::size_t f = 0; f < factor_names_.size(); ++f)
        meta["factors"].push_back({{"name", factor_names_[f]}, {"values", factor_values_[f]}});
    meta["schema_hash"] = schema_;
    meta["accuracy"] = val_accuracy_;
    meta["config"] = {{"epochs", cfg_.epochs},        {"lr", cfg_.lr},
                      {"batch_size", cfg_.batch_size}, {"base_channels", cfg_.base_channels},
                      {"hidden_dim", cfg_.hidden_dim}, {"holdout_fraction", cfg_.holdout_fraction},
                      {"seed", cfg_.seed}};
    const std::string meta_str = meta.dump();

    const fs::path tmp = target.string() + ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) throw OracleError("cannot write classifier checkpoint: " + path);
        os.write(kMagic, 8);
        write_u32(os, static_cast<std::uint32_t>(meta_str.size()));
        os.write(meta_str.data(), static_cast<std::streamsize>(meta_str.size()));
        auto params = const_cast<ClassifierHandle*>(this)->all_params();
        write_u32(os, static_cast<std::uint32_t>(params.size()));
        for (auto* p : params) {
            write_u64(os, p->w.size());
            os.write(reinterpret_cast<const char*>(p->w.data()),
                     static_cast<std::streamsize>(p->w.size() * sizeof(float)));
        }
        if (!os) throw OracleError("write failed: " + path);
    }
    fs::rename(tmp, target);
}

ClassifierHandle ClassifierHandle::load(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw OracleError("cannot open classifier checkpoint: " + path);
    char magic[8];
    is.read(magic, 8);
    if (std::string_view(magic, 8) != std::string_view(kMagic, 8))
        throw OracleError("bad classifier checkpoint magic: " + path);
    std::string meta_str(read_u32(is), '\0');
    is.read(meta_str.data(), static_cast<std::streamsize>(meta_str.size()));
    auto meta = nlohmann::json::parse(meta_str);

    std::vector<std::string> names;
    std::vector<std::vector<std::string>> values;
    for (const auto& f : meta.at("factors")) {
        names.push_back(f.at("name"));
        values.push_back(f.at("values").get<std::vector<std::string>>());
    }
    ClassifierConfig cfg;
    const auto& jc = meta.at("config");
    cfg.epochs = jc.at("epochs");
    cfg.lr = jc.at("lr");
    cfg.batch_size = jc.at("batch_size");
    cfg.base_channels = jc.at("base_channels");
    cfg.hidden_dim = jc.at("hidden_dim");
    cfg.holdout_fraction = jc.at("holdout_fraction");
    cfg.seed = jc.at("seed");

    ClassifierHandle handle(meta.at("image_size"), names, values, meta.at("schema_hash"), cfg);
    handle.val_accuracy_ = meta.at("accuracy").get<std::map<std::string, double>>();
    auto params = handle.all_params();
    if (read_u32(is) != params.size())
        throw OracleError("parameter block count mismatch: " + path);
    for (auto* p : params) {
        if (read_u64(is) != p->w.size())
            throw OracleError("parameter block size mismatch: " + path);
        is.read(reinterpret_cast<char*>(p->w.data()),
                static_cast<std::streamsize>(p->w.size() * sizeof(float)));
    }
    if (!is) throw OracleError("truncated classifier checkpoint: " + path);
    return handle;
}

}  // namespace cdb::oracle
