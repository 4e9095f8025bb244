#pragma once

// Multi-head factor classifier: (CONV+RELU)x3 + FC trunk with one softmax
// head per generative factor. Supplies the per-factor-value probabilities
// the counterfactual-gap metric conditions on.

#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "cdb/models/train.hpp"
#include "cdb/nn/layers.hpp"

namespace cdb::oracle {

struct OracleError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct DegenerateFactorError : OracleError {
    using OracleError::OracleError;
};
struct SchemaMismatchError : OracleError {
    using OracleError::OracleError;
};

struct FactorProbabilities {
    // factor name -> probability vector over that factor's declared values
    std::map<std::string, std::vector<float>> probs;
};

struct ClassifierConfig {
    int epochs = 20;
    float lr = 1e-3f;
    int batch_size = 32;
    int base_channels = 16;
    int hidden_dim = 128;
    float holdout_fraction = 0.2f;
    std::uint64_t seed = 0;
};

// Stable hash of the factor schema (names + ordered value lists); training
// and inference manifests must agree on it.
std::uint64_t schema_hash(const scm::CausalGraphSpec& graph);

class ClassifierHandle {
public:
    ClassifierHandle(int image_size, const std::vector<std::string>& factor_names,
                     const std::vector<std::vector<std::string>>& factor_values,
                     std::uint64_t schema, const ClassifierConfig& cfg);

    // One image (CHW floats in [0,1]); deterministic.
    FactorProbabilities predict(const float* image, int image_size) const;
    // Batch variant used by training/eval loops: raw per-head probabilities.
    std::vector<std::vector<float>> predict_batch(const float* images, int batch) const;

    int image_size() const { return image_size_; }
    std::uint64_t schema() const { return schema_; }
    int output_width() const;  // sum of head cardinalities
    const std::vector<std::string>& factor_names() const { return factor_names_; }
    const std::vector<std::vector<std::string>>& factor_values() const { return factor_values_; }
    const std::map<std::string, double>& validation_accuracy() const { return val_accuracy_; }

    void save(const std::string& path) const;
    static ClassifierHandle load(const std::string& path);

private:
    friend ClassifierHandle train_classifier(const models::BatchDataset&,
                                             const scm::CausalGraphSpec&,
                                             const ClassifierConfig&);
    int image_size_;
    std::vector<std::string> factor_names_;
    std::vector<std::vector<std::string>> factor_values_;
    std::uint64_t schema_;
    ClassifierConfig cfg_;
    mutable cdb::nn::Sequential trunk_;
    mutable std::vector<cdb::nn::Dense> heads_;
    std::map<std::string, double> val_accuracy_;

    std::vector<cdb::nn::ParamBlock*> all_params();
};

// Trains on an 80/20 split (holdout fraction from cfg) of the in-memory set
// and reports held-out per-factor accuracy. Throws DegenerateFactorError if
// any factor shows a single value in the training split.
ClassifierHandle train_classifier(const models::BatchDataset& data,
                                  const scm::CausalGraphSpec& graph,
                                  const ClassifierConfig& cfg);

}  // namespace cdb::oracle
