#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <vector>

#include "vitalcast/error.hpp"
#include "vitalcast/gradcheck.hpp"
#include "vitalcast/tensor.hpp"

namespace vitalcast {

enum class ModelKind { NBeats, NHits };

inline const char* model_kind_name(ModelKind k) {
    return k == ModelKind::NBeats ? "nbeats" : "nhits";
}

inline ModelKind model_kind_from_name(const std::string& name) {
    if (name == "nbeats") return ModelKind::NBeats;
    if (name == "nhits") return ModelKind::NHits;
    throw ConfigError("unknown model kind '" + name + "' (expected nbeats or nhits)");
}

/// Architecture knobs shared by both forecasters. `kernels` and `ratios` are
/// per-stack and only consulted by the multi-rate model.
struct ModelArch {
    std::size_t stacks = 3;
    std::size_t blocks_per_stack = 3;
    std::size_t width = 128;
    std::vector<std::size_t> kernels; // pooling kernel per stack, 1 = no pooling
    std::vector<std::size_t> ratios;  // forecast-coefficient reduction per stack
};

inline ModelArch default_arch(ModelKind kind) {
    ModelArch a;
    if (kind == ModelKind::NHits) {
        a.blocks_per_stack = 1;
        a.kernels = {8, 4, 1};
        a.ratios = {12, 4, 1};
    }
    return a;
}

struct ForecastResult {
    TensorPtr forecast; // {1, horizon}
    TensorPtr residual; // {1, channels*history}, what the stacks left unexplained
};

/// A differentiable map from a multichannel history to a horizon forecast.
/// `forward` builds the computation on the given tape; parameters appear in a
/// stable declaration order so checkpoints are position-independent.
class Forecaster {
public:
    virtual ~Forecaster() = default;

    /// input shape {channels, history}
    virtual ForecastResult forward(Tape& tape, const TensorPtr& input) = 0;
    virtual std::vector<NamedParam> params() = 0;

    std::size_t channels() const { return channels_; }
    std::size_t history() const { return history_; }
    std::size_t horizon() const { return horizon_; }

protected:
    Forecaster(std::size_t channels, std::size_t history, std::size_t horizon)
        : channels_(channels), history_(history), horizon_(horizon) {
        if (channels == 0 || history == 0 || horizon == 0)
            throw ConfigError("channels, history, and horizon must be positive");
    }

    std::size_t channels_;
    std::size_t history_;
    std::size_t horizon_;
};

} // namespace vitalcast
