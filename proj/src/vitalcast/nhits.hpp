#pragma once

#include <cstddef>
#include <vector>

#include "vitalcast/forecaster.hpp"
#include "vitalcast/nbeats.hpp"
#include "vitalcast/rng.hpp"

namespace vitalcast {

/// Max-pools each channel of a flat {1, channels*len} residual independently
/// with kernel and stride k (last window may be partial), then re-flattens.
/// k == 1 returns the input untouched.
TensorPtr multirate_pool(Tape& tape, const TensorPtr& flat, std::size_t channels,
                         std::size_t len, std::size_t k);

/// Multi-rate variant of the residual-stack forecaster. Each stack pools the
/// running residual before its blocks see it, and emits a reduced set of
/// forecast coefficients that a fixed linear interpolation expands to the
/// horizon. Backcasts stay at full resolution so residual subtraction is
/// well defined. With all kernels 1 and all ratios 1 the pooling and
/// interpolation vanish structurally and the model is the plain one.
class NHitsForecaster : public Forecaster {
public:
    NHitsForecaster(std::size_t channels, std::size_t history, std::size_t horizon,
                    const ModelArch& arch, Rng& rng);

    ForecastResult forward(Tape& tape, const TensorPtr& input) override;
    std::vector<NamedParam> params() override;

    const ModelArch& arch() const { return arch_; }
    const std::vector<std::size_t>& kernels() const { return kernels_; }
    /// Blocks by stack, for per-block decomposition readouts.
    const std::vector<std::vector<Block>>& stack_blocks() const { return stacks_; }

private:
    ModelArch arch_;
    std::vector<std::size_t> kernels_; // per stack
    std::vector<std::vector<Block>> stacks_;
};

} // namespace vitalcast
