#pragma once

// Training orchestration: in-memory training sets built from dataset
// manifests, a ModelHandle bundling backbone + auxiliary networks, the
// epoch loop with per-variant losses, and epoch-granular checkpointing.

#include <memory>
#include <string>
#include <vector>

#include "cdb/datagen/dataset.hpp"
#include "cdb/models/vae.hpp"

namespace cdb::models {

struct TrainError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct BatchDataset {
    int image_size = 0;
    int channels = 3;
    std::size_t n = 0;
    std::vector<float> images;        // n x (channels*size*size), [0,1]
    std::vector<int> labels;          // n x n_factors (value indices)
    std::vector<char> labeled;        // supervision flags (fraction of n)
    std::vector<datagen::Bounds> bounds;
    std::vector<std::string> factor_names;
    std::vector<int> cardinalities;
    std::size_t numel() const {
        return static_cast<std::size_t>(channels) * image_size * image_size;
    }
};

// Loads every record's PNG and labels; the labeled subset is a deterministic
// choice of ceil(fraction * n) records from `seed`.
BatchDataset load_training_set(const datagen::DatasetManifest& manifest,
                               float supervision_fraction, std::uint64_t seed);

// Builds the {0,1} in-box mask for one record (all 3 channels).
void fill_bb_mask(const datagen::Bounds& b, int image_size, int channels, float* mask);

struct ModelHandle {
    Variant variant;
    TrainConfig cfg;
    int image_size = 0;
    int channels = 3;
    std::vector<int> cardinalities;
    std::unique_ptr<ConvVae> vae;
    std::unique_ptr<Discriminator> disc;    // factor-vae variants only
    std::unique_ptr<SupervisedHeads> heads; // ss-* variants only
    int epochs_done = 0;

    std::vector<cdb::nn::ParamBlock*> vae_params();  // backbone + heads
};

ModelHandle make_model(const Variant& variant, const TrainConfig& cfg, int image_size,
                       int channels, const std::vector<int>& cardinalities);

struct EpochLog {
    int epoch = 0;
    double total = 0, recon = 0, kl = 0, regularizer = 0, supervised = 0, bb = 0;
};

struct TrainOutcome {
    std::vector<EpochLog> log;
    bool aborted_nan = false;
};

// Runs cfg.epochs epochs (resuming from handle.epochs_done). After each
// epoch the checkpoint is rewritten atomically and a JSONL record appended
// to log_path (empty paths skip persistence). On NaN loss the epoch is
// abandoned, the last-good checkpoint is kept, and aborted_nan is set.
TrainOutcome train_model(ModelHandle& handle, const BatchDataset& data,
                         const std::string& checkpoint_path, const std::string& log_path);

}  // namespace cdb::models
