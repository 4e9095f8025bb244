#pragma once

// Counterfactual-generativeness: interventions on attributed latent index
// sets, rendered through the model's generator and scored by the change in
// the factor classifier's probability of the ground-truth value. The core
// is callback-based so analytic fixtures can stand in for real models.

#include <functional>

#include "cdb/metrics/metrics.hpp"
#include "cdb/models/train.hpp"
#include "cdb/oracle/classifier.hpp"

namespace cdb::metrics {

struct InvalidOracleError : MetricError {
    using MetricError::MetricError;
};

enum class BaselineMode { max_deviation, zero, dataset_mean };
enum class CgAggregation {
    alg_abs_of_mean,  // per-image difference, mean over images, |.| per factor
    mean_of_abs       // per-image |difference|, mean over images
};

BaselineMode parse_baseline(const std::string& name);  // "max-dev" | "zero" | "mean"

// Per dimension in `idx`: the dataset min or max of that latent dim,
// whichever lies farther from `current` (or 0 / the dataset mean).
std::vector<double> baseline_latents(const LatentData& codes, const std::vector<int>& idx,
                                     const std::vector<double>& current, BaselineMode mode);

// generate(z) -> image tensor; classify(image, factor) -> categorical
// distribution over that factor's values.
using GenerateFn = std::function<std::vector<float>(const std::vector<double>&)>;
using ClassifyFn = std::function<std::vector<double>(const std::vector<float>&, std::size_t)>;

struct CgOptions {
    BaselineMode baseline = BaselineMode::max_deviation;
    CgAggregation aggregation = CgAggregation::alg_abs_of_mean;
};

// |p(value k | generate(z)) - p(value k | generate(z with dims idx set to
// baseline))| for one record; `in_set=false` intervenes on the complement.
double ice_set(const GenerateFn& generate, const ClassifyFn& classify,
               const LatentData& codes, const FactorLatentMap& map, std::size_t factor,
               std::size_t row, bool in_set, BaselineMode mode);

double compute_cg(const GenerateFn& generate, const ClassifyFn& classify,
                  const LatentData& codes, const FactorLatentMap& map,
                  const CgOptions& opts = {});

// Adapter over trained artifacts; refuses classifiers below the accuracy
// floor on any factor and checks the schema hash against the codes' factor
// list length/order by name.
double compute_cg(cdb::models::ConvVae& model, const cdb::oracle::ClassifierHandle& clf,
                  const LatentData& codes, const FactorLatentMap& map,
                  const CgOptions& opts = {}, double accuracy_floor = 0.9);

}  // namespace cdb::metrics
