#pragma once

#include <cstdint>
#include <vector>

#include "vitalcast/tensor.hpp"

namespace vitalcast {

/// First/second moment estimates and step counter for one parameter tensor.
struct AdamState {
    std::vector<double> m;
    std::vector<double> v;
    std::int64_t t = 0;
};

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

/// Adam with bias correction over a fixed parameter set.
class AdamOptimizer {
public:
    AdamOptimizer(std::vector<TensorPtr> params, AdamConfig cfg = {});

    /// Applies one update and clears the gradients. Every parameter must have
    /// a populated gradient (backward fills zeros for disconnected ones).
    void step();

    const AdamConfig& config() const { return cfg_; }
    const std::vector<AdamState>& states() const { return states_; }

private:
    std::vector<TensorPtr> params_;
    std::vector<AdamState> states_;
    AdamConfig cfg_;
};

/// Scales all gradients so their global L2 norm is at most max_norm.
/// Returns the norm before clipping.
double clip_gradient_norm(const std::vector<TensorPtr>& params, double max_norm);

} // namespace vitalcast
