#include <algorithm>
#include <cmath>
#include <numeric>

#include "cdb/metrics/metrics.hpp"

namespace cdb::metrics {

double quantile(std::vector<double> v, double q) {
    if (v.empty()) throw MetricError("quantile of empty sample");
    std::sort(v.begin(), v.end());
    const double pos = q * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = static_cast<std::size_t>(std::ceil(pos));
    const double frac = pos - static_cast<double>(lo);
    return v[lo] * (1.0 - frac) + v[hi] * frac;
}

IrsResult compute_irs(const LatentData& data, int rho, double diff_quantile) {
    const std::size_t L = data.rows, m = data.cols, n = data.n_factors();
    if (L < 2) throw MetricError("need at least two latent rows");
    if (n == 0) throw MetricError("no factors");
    if (rho < 1 || static_cast<std::size_t>(rho) > m)
        throw MetricError("rho must lie in [1, m]");

    // Global per-dim deviation scale: max |z - mean|.
    std::vector<double> mean(m, 0.0), max_dev(m, 0.0);
    for (std::size_t r = 0; r < L; ++r)
        for (std::size_t d = 0; d < m; ++d) mean[d] += data.at(r, d);
    for (auto& v : mean) v /= static_cast<double>(L);
    for (std::size_t r = 0; r < L; ++r)
        for (std::size_t d = 0; d < m; ++d)
            max_dev[d] = std::max(max_dev[d], std::abs(data.at(r, d) - mean[d]));

    IrsResult out;
    out.map.factor_names = data.factor_names;
    out.map.rho = rho;
    out.map.m = m;
    out.map.importance.assign(n * m, 0.0);

    for (std::size_t i = 0; i < n; ++i) {
        // group rows by this factor's value
        std::map<int, std::vector<std::size_t>> groups;
        for (std::size_t r = 0; r < L; ++r) groups[data.labels[r * n + i]].push_back(r);
        if (groups.size() < 2)
            throw UndefinedFactorError("factor " + data.factor_names[i] +
                                       " is constant across the dataset");

        std::vector<double> cum(m, 0.0);
        for (const auto& [value, rows] : groups) {
            std::vector<double> local_mean(m, 0.0);
            for (std::size_t r : rows)
                for (std::size_t d = 0; d < m; ++d) local_mean[d] += data.at(r, d);
            for (auto& v : local_mean) v /= static_cast<double>(rows.size());
            for (std::size_t d = 0; d < m; ++d) {
                std::vector<double> diffs;
                diffs.reserve(rows.size());
                for (std::size_t r : rows)
                    diffs.push_back(std::abs(data.at(r, d) - local_mean[d]));
                cum[d] += quantile(std::move(diffs), diff_quantile);
            }
        }
        for (std::size_t d = 0; d < m; ++d) {
            const double c = cum[d] / static_cast<double>(groups.size());
            const double imp = max_dev[d] > 0.0 ? 1.0 - c / max_dev[d] : 0.0;
            out.map.importance[i * m + d] = imp;
        }

        // top-rho by importance, ties broken by lowest index
        std::vector<int> order(m);
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
            return out.map.importance[i * m + a] > out.map.importance[i * m + b];
        });
        std::vector<int> picked(order.begin(), order.begin() + rho);
        std::sort(picked.begin(), picked.end());
        out.map.entries[data.factor_names[i]] = std::move(picked);
    }

    // Score: for each latent, robustness of its best factor, weighted by the
    // latent's deviation scale.
    double num = 0.0, den = 0.0;
    for (std::size_t d = 0; d < m; ++d) {
        double best = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            best = std::max(best, out.map.importance[i * m + d]);
        num += best * max_dev[d];
        den += max_dev[d];
    }
    out.score = den > 0.0 ? num / den : 0.0;
    out.score = std::clamp(out.score, 0.0, 1.0);
    return out;
}

}  // namespace cdb::metrics
