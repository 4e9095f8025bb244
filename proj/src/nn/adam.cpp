#include "cdb/nn/adam.hpp"

#include <cmath>

#include "cdb/simd/kernels.hpp"

namespace cdb::nn {

Adam::Adam(std::vector<ParamBlock*> params, float lr, float beta1, float beta2, float eps)
    : params_(std::move(params)), lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
    m_.reserve(params_.size());
    v_.reserve(params_.size());
    for (auto* p : params_) {
        m_.emplace_back(p->w.size(), 0.0f);
        v_.emplace_back(p->w.size(), 0.0f);
    }
}

void Adam::step() {
    ++t_;
    const float bc1 = 1.0f - std::pow(beta1_, static_cast<float>(t_));
    const float bc2 = 1.0f - std::pow(beta2_, static_cast<float>(t_));
    const auto& ker = cdb::simd::active();
    for (std::size_t i = 0; i < params_.size(); ++i) {
        auto* p = params_[i];
        ker.adam_step(p->w.data(), m_[i].data(), v_[i].data(), p->g.data(), p->w.size(), lr_,
                      beta1_, beta2_, eps_, bc1, bc2);
    }
}

}  // namespace cdb::nn
