#include <algorithm>
#include <cmath>
#include <numeric>

#include "cdb/metrics/metrics.hpp"
#include "cdb/scm/graph.hpp"

namespace cdb::metrics {

namespace {

// Random-forest classifier grown per factor purely to harvest gini
// importances; prediction quality is incidental.
struct ForestTrainer {
    const LatentData& data;
    std::size_t factor;
    int n_classes;
    const DciOptions& opts;
    std::vector<double>& importance;  // per latent dim, accumulated

    double gini(const std::vector<int>& counts, int total) const {
        if (total == 0) return 0.0;
        double g = 1.0;
        for (int c : counts) {
            const double p = static_cast<double>(c) / total;
            g -= p * p;
        }
        return g;
    }

    int label(std::size_t row) const {
        return data.labels[row * data.n_factors() + factor];
    }

    void grow(std::vector<std::size_t>& rows, int depth, std::uint64_t& rng,
              double root_size) {
        const int total = static_cast<int>(rows.size());
        std::vector<int> counts(n_classes, 0);
        for (std::size_t r : rows) ++counts[label(r)];
        const double node_gini = gini(counts, total);
        if (depth >= opts.max_depth || total < opts.min_samples_split || node_gini == 0.0)
            return;

        // feature subsample: ceil(sqrt(m)) candidate dims
        const std::size_t m = data.cols;
        const auto k = static_cast<std::size_t>(std::ceil(std::sqrt(double(m))));
        std::vector<std::size_t> feats(m);
        std::iota(feats.begin(), feats.end(), 0);
        for (std::size_t i = 0; i < k; ++i)
            std::swap(feats[i], feats[i + scm::next_below(rng, m - i)]);

        double best_gain = 0.0;
        std::size_t best_dim = 0;
        double best_thr = 0.0;
        for (std::size_t fi = 0; fi < k; ++fi) {
            const std::size_t d = feats[fi];
            std::vector<std::size_t> order(rows);
            std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
                return data.at(a, d) < data.at(b, d);
            });
            std::vector<int> left(n_classes, 0), right(counts);
            for (int pos = 0; pos + 1 < total; ++pos) {
                const int lab = label(order[pos]);
                ++left[lab];
                --right[lab];
                const double v = data.at(order[pos], d);
                const double nv = data.at(order[pos + 1], d);
                if (nv <= v) continue;  // no threshold between equal values
                const int nl = pos + 1, nr = total - nl;
                const double gain = node_gini -
                                    (nl * gini(left, nl) + nr * gini(right, nr)) / total;
                if (gain > best_gain + 1e-15) {
                    best_gain = gain;
                    best_dim = d;
                    best_thr = 0.5 * (v + nv);
                }
            }
        }
        if (best_gain <= 0.0) return;

        importance[best_dim] += best_gain * (total / root_size);
        std::vector<std::size_t> lrows, rrows;
        for (std::size_t r : rows)
            (data.at(r, best_dim) < best_thr ? lrows : rrows).push_back(r);
        if (lrows.empty() || rrows.empty()) return;
        grow(lrows, depth + 1, rng, root_size);
        grow(rrows, depth + 1, rng, root_size);
    }

    void fit() {
        std::uint64_t rng = opts.seed ^ (0x9e3779b97f4a7c15ULL * (factor + 1));
        for (int t = 0; t < opts.n_trees; ++t) {
            std::vector<std::size_t> rows(data.rows);
            for (auto& r : rows) r = scm::next_below(rng, data.rows);  // bootstrap
            grow(rows, 0, rng, static_cast<double>(rows.size()));
        }
        for (auto& v : importance) v /= opts.n_trees;
    }
};

}  // namespace

double compute_dci_d(const LatentData& data, const DciOptions& opts) {
    const std::size_t m = data.cols, n = data.n_factors();
    if (data.rows < 2) throw MetricError("need at least two latent rows");
    if (n == 0) throw MetricError("no factors");

    // importance matrix R[i][d]
    std::vector<std::vector<double>> R(n, std::vector<double>(m, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
        int n_classes = 0;
        for (std::size_t r = 0; r < data.rows; ++r)
            n_classes = std::max(n_classes, data.labels[r * n + i] + 1);
        bool varies = false;
        for (std::size_t r = 1; r < data.rows; ++r)
            if (data.labels[r * n + i] != data.labels[0 * n + i]) {
                varies = true;
                break;
            }
        if (!varies)
            throw UndefinedFactorError("factor " + data.factor_names[i] +
                                       " is constant across the dataset");
        ForestTrainer trainer{data, i, n_classes, opts, R[i]};
        trainer.fit();
    }

    // per-latent disentanglement: 1 - entropy (base n) of the factor profile
    double grand = 0.0;
    std::vector<double> latent_total(m, 0.0);
    for (std::size_t d = 0; d < m; ++d) {
        for (std::size_t i = 0; i < n; ++i) latent_total[d] += R[i][d];
        grand += latent_total[d];
    }
    if (grand <= 0.0) return 0.0;

    double score = 0.0;
    for (std::size_t d = 0; d < m; ++d) {
        if (latent_total[d] <= 0.0) continue;
        double h = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double p = R[i][d] / latent_total[d];
            if (p > 0.0) h -= p * std::log(p);
        }
        const double disent = n > 1 ? 1.0 - h / std::log(static_cast<double>(n)) : 1.0;
        score += (latent_total[d] / grand) * disent;
    }
    return std::clamp(score, 0.0, 1.0);
}

}  // namespace cdb::metrics
