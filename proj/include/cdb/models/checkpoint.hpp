#pragma once

// Versioned binary checkpoints: header (variant, config, schema, seed,
// epoch count) + parameter and optimizer-moment blocks. Writes go to a
// temp file in the same directory and are renamed into place.

#include <string>

#include "cdb/models/train.hpp"
#include "cdb/nn/adam.hpp"

namespace cdb::models {

struct CheckpointError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void save_checkpoint(const std::string& path, ModelHandle& handle, cdb::nn::Adam* vae_opt,
                     cdb::nn::Adam* disc_opt);

// Rebuilds the model from the stored variant/config/schema and restores
// parameters; optimizer state is restored into the optional Adam outputs by
// train_model after it constructs them.
struct LoadedCheckpoint {
    ModelHandle handle;
    long vae_opt_step = 0;
    long disc_opt_step = 0;
    std::vector<std::vector<float>> vae_m1, vae_m2, disc_m1, disc_m2;
};

LoadedCheckpoint load_checkpoint(const std::string& path);

}  // namespace cdb::models
