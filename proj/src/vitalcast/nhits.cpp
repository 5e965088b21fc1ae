#include "vitalcast/nhits.hpp"

#include <cmath>

namespace vitalcast {

TensorPtr multirate_pool(Tape& tape, const TensorPtr& flat, std::size_t channels,
                         std::size_t len, std::size_t k) {
    if (k == 0) throw ConfigError("pooling kernel must be >= 1");
    if (flat->numel() != channels * len)
        throw ShapeError("multirate_pool: numel " + std::to_string(flat->numel()) +
                         " != channels*len " + std::to_string(channels * len));
    if (k == 1) return flat;
    std::vector<TensorPtr> pooled;
    pooled.reserve(channels);
    for (std::size_t c = 0; c < channels; ++c)
        pooled.push_back(tape.maxpool1d(tape.slice(flat, c * len, len), k));
    const std::size_t plen = (len + k - 1) / k;
    return tape.reshape(tape.concat(pooled), {1, channels * plen});
}

NHitsForecaster::NHitsForecaster(std::size_t channels, std::size_t history,
                                 std::size_t horizon, const ModelArch& arch, Rng& rng)
    : Forecaster(channels, history, horizon), arch_(arch) {
    if (arch.stacks == 0 || arch.blocks_per_stack == 0 || arch.width == 0)
        throw ConfigError("architecture needs positive stack count, block count, and width");
    if (arch.kernels.size() != arch.stacks || arch.ratios.size() != arch.stacks)
        throw ConfigError("need one pooling kernel and one ratio per stack: stacks=" +
                          std::to_string(arch.stacks) + ", kernels=" +
                          std::to_string(arch.kernels.size()) + ", ratios=" +
                          std::to_string(arch.ratios.size()));

    const std::size_t flat = channels * history;
    kernels_ = arch.kernels;
    stacks_.resize(arch.stacks);
    for (std::size_t s = 0; s < arch.stacks; ++s) {
        const std::size_t k = arch.kernels[s];
        const std::size_t r = arch.ratios[s];
        if (k == 0 || r == 0) throw ConfigError("kernels and ratios must be >= 1");
        const std::size_t pooled_len = (history + k - 1) / k;
        // coefficient count c = ceil(horizon / ratio), clamped into [1, horizon]
        const std::size_t c = std::max<std::size_t>(1, (horizon + r - 1) / r);
        for (std::size_t b = 0; b < arch.blocks_per_stack; ++b)
            stacks_[s].emplace_back(channels * pooled_len, flat, c, horizon, arch.width, rng);
    }
}

ForecastResult NHitsForecaster::forward(Tape& tape, const TensorPtr& input) {
    if (input->rank() != 2 || input->dim(0) != channels_ || input->dim(1) != history_)
        throw ShapeError("expected input {" + std::to_string(channels_) + ", " +
                         std::to_string(history_) + "}, got " + Tensor::shape_str(input->shape));
    TensorPtr residual = tape.reshape(input, {1, channels_ * history_});
    TensorPtr forecast;
    for (std::size_t s = 0; s < stacks_.size(); ++s) {
        for (auto& block : stacks_[s]) {
            // Pooling tracks the running residual, so later blocks of a stack
            // see the residual their predecessors left, resampled.
            const TensorPtr x = multirate_pool(tape, residual, channels_, history_, kernels_[s]);
            auto [backcast, f] = block.forward(tape, x);
            residual = tape.sub(residual, backcast);
            forecast = forecast ? tape.add(forecast, f) : f;
        }
    }
    return {forecast, residual};
}

std::vector<NamedParam> NHitsForecaster::params() {
    std::vector<NamedParam> out;
    for (std::size_t s = 0; s < stacks_.size(); ++s)
        for (std::size_t b = 0; b < stacks_[s].size(); ++b)
            stacks_[s][b].collect_params(
                "s" + std::to_string(s) + ".b" + std::to_string(b), out);
    return out;
}

} // namespace vitalcast
