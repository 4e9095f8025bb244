#pragma once

#include <cstddef>
#include <vector>

#include "cdb/nn/layers.hpp"

namespace cdb::nn {

// Adam with bias correction; one moment pair per registered parameter block.
class Adam {
public:
    explicit Adam(std::vector<ParamBlock*> params, float lr = 1e-3f, float beta1 = 0.9f,
                  float beta2 = 0.999f, float eps = 1e-8f);

    // Applies one update using the accumulated gradients, then advances t.
    void step();
    void set_lr(float lr) { lr_ = lr; }
    long step_count() const { return t_; }

    // Optimizer state, exposed so checkpoints can make training resumable.
    std::vector<std::vector<float>>& moment1() { return m_; }
    std::vector<std::vector<float>>& moment2() { return v_; }
    void set_step_count(long t) { t_ = t; }

private:
    std::vector<ParamBlock*> params_;
    std::vector<std::vector<float>> m_, v_;
    float lr_, beta1_, beta2_, eps_;
    long t_ = 0;
};

}  // namespace cdb::nn
