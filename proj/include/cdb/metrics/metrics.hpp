#pragma once

// Causal disentanglement metrics over exported latent codes:
// interventional-robustness attribution (factor -> latent index sets),
// unconfoundedness over those sets, and the tree-ensemble DCI-D
// disentanglement score. All functions are pure over their matrix inputs.

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace cdb::metrics {

struct MetricError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct UndefinedFactorError : MetricError {
    using MetricError::MetricError;
};

// Row-major L x m latent matrix plus aligned L x n integer labels.
struct LatentData {
    std::size_t rows = 0;
    std::size_t cols = 0;  // latent dimensionality m
    std::vector<double> values;  // rows x cols
    std::vector<std::string> factor_names;
    std::vector<int> labels;  // rows x factor_names.size()

    double at(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
    std::size_t n_factors() const { return factor_names.size(); }
};

struct FactorLatentMap {
    std::vector<std::string> factor_names;
    // per factor: ordered set of rho latent indices, ascending
    std::map<std::string, std::vector<int>> entries;
    int rho = 1;
    // importance[i*m + d]: attribution of latent d to factor i
    std::size_t m = 0;
    std::vector<double> importance;
};

struct IrsResult {
    double score = 0.0;
    FactorLatentMap map;
};

// Interventional-robustness attribution. For each latent dim the global
// deviation scale is max|z - mean(z)|; per factor value the within-group
// diff_quantile of |z - E[z | value]| is averaged over values, and
// importance = 1 - cum/max. Top-rho indices per factor (ties -> lowest
// index) define the map; the score is the max-deviation-weighted average
// over latents of each latent's best factor robustness.
IrsResult compute_irs(const LatentData& data, int rho, double diff_quantile = 0.99);

// |A n B| / |A u B|; 0 when both sets are empty.
double jaccard(const std::vector<int>& a, const std::vector<int>& b);

// UC = 1 - (2 / (n(n-1))) * sum_{I<J} jaccard(Z_I, Z_J); needs n >= 2.
double compute_uc(const FactorLatentMap& map);

// DCI-D: per-factor tree-ensemble predictors on the latents, gini-importance
// matrix, per-latent entropy -> disentanglement, weighted by relative
// latent importance.
struct DciOptions {
    int n_trees = 10;
    int max_depth = 12;
    int min_samples_split = 4;
    std::uint64_t seed = 0;
};
double compute_dci_d(const LatentData& data, const DciOptions& opts = {});

// Linear-interpolation percentile (q in [0,1]) of an unsorted sample.
double quantile(std::vector<double> v, double q);

}  // namespace cdb::metrics
