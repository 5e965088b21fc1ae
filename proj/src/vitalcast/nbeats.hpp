#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "vitalcast/forecaster.hpp"
#include "vitalcast/rng.hpp"
#include "vitalcast/tensor.hpp"

namespace vitalcast {

/// One doubly-residual block. Four fully connected layers condense the input;
/// two linear projections emit expansion coefficients; learnable basis
/// matrices (identity at init) map the coefficients to a full-resolution
/// backcast and a horizon forecast.
///
/// `coeff_dim` is the forecast-coefficient count. When it is smaller than the
/// horizon, a fixed (non-learnable) linear-interpolation matrix expands the
/// coefficients to horizon length before the forecast basis applies; when it
/// equals the horizon that matrix is the identity and is skipped outright, so
/// a reduced block degenerates to the plain block exactly.
struct Block {
    std::size_t input_dim = 0;
    std::size_t backcast_dim = 0;
    std::size_t coeff_dim = 0;
    std::size_t horizon = 0;
    std::size_t width = 0;

    TensorPtr fc_w[4], fc_b[4];
    TensorPtr proj_b_w, proj_b_b; // {width, backcast_dim}
    TensorPtr proj_f_w, proj_f_b; // {width, coeff_dim}
    TensorPtr basis_b;            // {backcast_dim, backcast_dim}
    TensorPtr basis_f;            // {horizon, horizon}
    TensorPtr interp;             // {coeff_dim, horizon}, fixed; null when coeff_dim == horizon

    Block() = default;
    Block(std::size_t input_dim, std::size_t backcast_dim, std::size_t coeff_dim,
          std::size_t horizon, std::size_t width, Rng& rng);

    /// x: {1, input_dim} -> (backcast {1, backcast_dim}, forecast {1, horizon})
    std::pair<TensorPtr, TensorPtr> forward(Tape& tape, const TensorPtr& x) const;

    void collect_params(const std::string& prefix, std::vector<NamedParam>& out);
};

/// Row j holds the weights that linearly interpolate knot j onto an
/// H-point grid, with knots at positions j*(H-1)/(c-1). c == 1 extends the
/// single knot as a constant. Endpoints are exact.
TensorPtr interpolation_matrix(std::size_t c, std::size_t horizon);

/// Fills a weight tensor with uniform He-style fan-in scaling,
/// w ~ U(-sqrt(6/fan_in), +sqrt(6/fan_in)).
void he_uniform_init(const TensorPtr& w, std::size_t fan_in, Rng& rng);

/// Generic N-BEATS: stacks of blocks chained on residuals. Each block
/// backcasts what it explained; the next block sees what is left. The model
/// forecast is the sum of all block forecasts.
class NBeatsForecaster : public Forecaster {
public:
    NBeatsForecaster(std::size_t channels, std::size_t history, std::size_t horizon,
                     const ModelArch& arch, Rng& rng);

    ForecastResult forward(Tape& tape, const TensorPtr& input) override;
    std::vector<NamedParam> params() override;

    const ModelArch& arch() const { return arch_; }
    /// Blocks by stack, for per-block decomposition readouts.
    const std::vector<std::vector<Block>>& stack_blocks() const { return stacks_; }

private:
    ModelArch arch_;
    std::vector<std::vector<Block>> stacks_;
};

} // namespace vitalcast
