#include "vitalcast/adam.hpp"

#include <cmath>
#include <string>

namespace vitalcast {

AdamOptimizer::AdamOptimizer(std::vector<TensorPtr> params, AdamConfig cfg)
    : params_(std::move(params)), cfg_(cfg) {
    states_.resize(params_.size());
    for (std::size_t i = 0; i < params_.size(); ++i) {
        states_[i].m.assign(params_[i]->numel(), 0.0);
        states_[i].v.assign(params_[i]->numel(), 0.0);
    }
}

void AdamOptimizer::step() {
    for (std::size_t i = 0; i < params_.size(); ++i) {
        if (params_[i]->grad.size() != params_[i]->numel()) {
            throw UsageError("adam_step: parameter " + std::to_string(i) +
                             " has no gradient; run backward first");
        }
    }
    for (std::size_t i = 0; i < params_.size(); ++i) {
        Tensor& p = *params_[i];
        AdamState& s = states_[i];
        s.t += 1;
        const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(s.t));
        const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(s.t));
        for (std::size_t j = 0; j < p.numel(); ++j) {
            const double g = p.grad[j];
            s.m[j] = cfg_.beta1 * s.m[j] + (1.0 - cfg_.beta1) * g;
            s.v[j] = cfg_.beta2 * s.v[j] + (1.0 - cfg_.beta2) * g * g;
            const double mhat = s.m[j] / bc1;
            const double vhat = s.v[j] / bc2;
            p.data[j] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
        }
        p.clear_grad();
    }
}

double clip_gradient_norm(const std::vector<TensorPtr>& params, double max_norm) {
    double sq = 0.0;
    for (const auto& p : params) {
        for (double g : p->grad) sq += g * g;
    }
    const double norm = std::sqrt(sq);
    if (norm > max_norm && norm > 0.0) {
        const double scale = max_norm / norm;
        for (const auto& p : params) {
            for (double& g : p->grad) g *= scale;
        }
    }
    return norm;
}

} // namespace vitalcast
