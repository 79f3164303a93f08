#include "ihdr/nn/optim.hpp"

#include <cmath>
#include <numbers>

#include "ihdr/error.hpp"

namespace ihdr::nn {

void AdamW::step(ParameterSet& params, double lr) {
    auto values = params.values();
    auto grads = params.grads();
    if (m_.empty()) {
        m_.assign(values.size(), 0.0);
        v_.assign(values.size(), 0.0);
    }
    if (m_.size() != values.size()) throw_internal("AdamW: parameter count changed between steps");
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t_));
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double g = grads[i];
        m_[i] = beta1 * m_[i] + (1.0 - beta1) * g;
        v_[i] = beta2 * v_[i] + (1.0 - beta2) * g * g;
        const double mhat = m_[i] / bc1;
        const double vhat = v_[i] / bc2;
        values[i] -= lr * (mhat / (std::sqrt(vhat) + eps) + weight_decay * values[i]);
    }
}

double cosine_lr(int step, int total, double lr_init, double lr_final) {
    if (total <= 1) return lr_init;
    const double progress = static_cast<double>(step) / static_cast<double>(total - 1);
    return lr_final + 0.5 * (lr_init - lr_final) * (1.0 + std::cos(std::numbers::pi * progress));
}

}  // namespace ihdr::nn
