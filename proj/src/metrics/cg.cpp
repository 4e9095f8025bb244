#include "cdb/metrics/cg.hpp"

#include <algorithm>
#include <cmath>

namespace cdb::metrics {

BaselineMode parse_baseline(const std::string& name) {
    if (name == "max-dev") return BaselineMode::max_deviation;
    if (name == "zero") return BaselineMode::zero;
    if (name == "mean") return BaselineMode::dataset_mean;
    throw MetricError("unknown baseline mode: " + name);
}

std::vector<double> baseline_latents(const LatentData& codes, const std::vector<int>& idx,
                                     const std::vector<double>& current, BaselineMode mode) {
    if (codes.rows == 0) throw MetricError("baseline over empty codes");
    std::vector<double> out(idx.size(), 0.0);
    if (mode == BaselineMode::zero) return out;
    for (std::size_t k = 0; k < idx.size(); ++k) {
        const auto d = static_cast<std::size_t>(idx[k]);
        if (d >= codes.cols) throw MetricError("latent index out of range");
        double lo = codes.at(0, d), hi = lo, sum = 0.0;
        for (std::size_t r = 0; r < codes.rows; ++r) {
            const double v = codes.at(r, d);
            lo = std::min(lo, v);
            hi = std::max(hi, v);
            sum += v;
        }
        if (mode == BaselineMode::dataset_mean) {
            out[k] = sum / static_cast<double>(codes.rows);
        } else {
            const double cur = current[k];
            out[k] = std::abs(hi - cur) >= std::abs(lo - cur) ? hi : lo;
        }
    }
    return out;
}

namespace {

std::vector<int> complement(const std::vector<int>& idx, std::size_t m) {
    std::vector<char> in(m, 0);
    for (int d : idx) in[d] = 1;
    std::vector<int> out;
    for (std::size_t d = 0; d < m; ++d)
        if (!in[d]) out.push_back(static_cast<int>(d));
    return out;
}

// per-dimension dataset statistics, computed once so scoring a whole
// manifest stays linear in its size
struct DimStats {
    std::vector<double> lo, hi, mean;
};

DimStats dim_stats(const LatentData& codes) {
    if (codes.rows == 0) throw MetricError("baseline over empty codes");
    DimStats s;
    s.lo.assign(codes.cols, 0.0);
    s.hi.assign(codes.cols, 0.0);
    s.mean.assign(codes.cols, 0.0);
    for (std::size_t d = 0; d < codes.cols; ++d) {
        double lo = codes.at(0, d), hi = lo, sum = 0.0;
        for (std::size_t r = 0; r < codes.rows; ++r) {
            const double v = codes.at(r, d);
            lo = std::min(lo, v);
            hi = std::max(hi, v);
            sum += v;
        }
        s.lo[d] = lo;
        s.hi[d] = hi;
        s.mean[d] = sum / static_cast<double>(codes.rows);
    }
    return s;
}

double baseline_value(const DimStats& stats, std::size_t dim, double current,
                      BaselineMode mode) {
    switch (mode) {
        case BaselineMode::zero:
            return 0.0;
        case BaselineMode::dataset_mean:
            return stats.mean[dim];
        case BaselineMode::max_deviation:
        default:
            return std::abs(stats.hi[dim] - current) >= std::abs(stats.lo[dim] - current)
                       ? stats.hi[dim]
                       : stats.lo[dim];
    }
}

double ice_with_stats(const GenerateFn& generate, const ClassifyFn& classify,
                      const LatentData& codes, const FactorLatentMap& map,
                      std::size_t factor, std::size_t row, bool in_set, BaselineMode mode,
                      const DimStats& stats) {
    const std::size_t m = codes.cols, n = codes.n_factors();
    const auto& attributed = map.entries.at(map.factor_names[factor]);
    const std::vector<int> idx = in_set ? attributed : complement(attributed, m);

    std::vector<double> z(m);
    for (std::size_t d = 0; d < m; ++d) z[d] = codes.at(row, d);
    std::vector<double> z_cf(z);
    for (int d : idx) {
        if (static_cast<std::size_t>(d) >= m) throw MetricError("latent index out of range");
        z_cf[d] = baseline_value(stats, d, z[d], mode);
    }

    const int truth = codes.labels[row * n + factor];
    const auto p_keep = classify(generate(z), factor);
    const auto p_base = classify(generate(z_cf), factor);
    return std::abs(p_keep.at(truth) - p_base.at(truth));
}

}  // namespace

double ice_set(const GenerateFn& generate, const ClassifyFn& classify,
               const LatentData& codes, const FactorLatentMap& map, std::size_t factor,
               std::size_t row, bool in_set, BaselineMode mode) {
    return ice_with_stats(generate, classify, codes, map, factor, row, in_set, mode,
                          dim_stats(codes));
}

double compute_cg(const GenerateFn& generate, const ClassifyFn& classify,
                  const LatentData& codes, const FactorLatentMap& map,
                  const CgOptions& opts) {
    const std::size_t L = codes.rows, n = codes.n_factors();
    if (L == 0) throw MetricError("counterfactual generativeness over empty dataset");
    if (n == 0) throw MetricError("no factors");

    const DimStats stats = dim_stats(codes);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double acc = 0.0;
        for (std::size_t r = 0; r < L; ++r) {
            const double d = ice_with_stats(generate, classify, codes, map, i, r, true,
                                            opts.baseline, stats) -
                             ice_with_stats(generate, classify, codes, map, i, r, false,
                                            opts.baseline, stats);
            acc += opts.aggregation == CgAggregation::mean_of_abs ? std::abs(d) : d;
        }
        acc /= static_cast<double>(L);
        total += opts.aggregation == CgAggregation::alg_abs_of_mean ? std::abs(acc) : acc;
    }
    return std::clamp(total / static_cast<double>(n), 0.0, 1.0);
}

double compute_cg(cdb::models::ConvVae& model, const cdb::oracle::ClassifierHandle& clf,
                  const LatentData& codes, const FactorLatentMap& map, const CgOptions& opts,
                  double accuracy_floor) {
    if (clf.factor_names().size() != codes.n_factors())
        throw InvalidOracleError("classifier factor count does not match latent labels");
    for (std::size_t i = 0; i < codes.n_factors(); ++i)
        if (clf.factor_names()[i] != codes.factor_names[i])
            throw InvalidOracleError("classifier factor order does not match latent labels");
    for (const auto& [name, acc] : clf.validation_accuracy())
        if (acc < accuracy_floor)
            throw InvalidOracleError("classifier accuracy on " + name + " (" +
                                     std::to_string(acc) + ") is below the floor " +
                                     std::to_string(accuracy_floor));

    GenerateFn gen = [&](const std::vector<double>& z) {
        std::vector<float> zf(z.begin(), z.end());
        return model.generate(zf.data(), 1);
    };
    ClassifyFn cls = [&](const std::vector<float>& image, std::size_t factor) {
        auto probs = clf.predict_batch(image.data(), 1);
        return std::vector<double>(probs[factor].begin(), probs[factor].end());
    };
    return compute_cg(gen, cls, codes, map, opts);
}

}  // namespace cdb::metrics
