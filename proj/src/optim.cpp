#include "polycl/optim.hpp"

#include <cmath>

namespace polycl {

Adam::Adam(std::vector<Param*> params, float beta1, float beta2, float eps)
    : params_(std::move(params)), beta1_(beta1), beta2_(beta2), eps_(eps) {
    m_.resize(params_.size());
    v_.resize(params_.size());
    for (size_t i = 0; i < params_.size(); ++i) {
        m_[i].assign(params_[i]->value.size(), 0.f);
        v_[i].assign(params_[i]->value.size(), 0.f);
    }
}

void Adam::zero_grad() {
    for (Param* p : params_) p->zero_grad();
}

void Adam::step(float lr) {
    ++step_count_;
    const float bc1 = 1.f - std::pow(beta1_, float(step_count_));
    const float bc2 = 1.f - std::pow(beta2_, float(step_count_));
    for (size_t i = 0; i < params_.size(); ++i) {
        float* w = params_[i]->value.data.data();
        const float* g = params_[i]->grad.data.data();
        float* m = m_[i].data();
        float* v = v_[i].data();
        const size_t n = params_[i]->value.size();
        for (size_t j = 0; j < n; ++j) {
            m[j] = beta1_ * m[j] + (1.f - beta1_) * g[j];
            v[j] = beta2_ * v[j] + (1.f - beta2_) * g[j] * g[j];
            const float mhat = m[j] / bc1;
            const float vhat = v[j] / bc2;
            w[j] -= lr * mhat / (std::sqrt(vhat) + eps_);
        }
    }
}

float CosineWarmRestarts::lr_at_epoch(int epoch) const {
    const int t = epoch % period;
    const float phase = float(t) / float(period);
    return floor + (peak - floor) * 0.5f * (1.f + std::cos(float(M_PI) * phase));
}

}  // namespace polycl
