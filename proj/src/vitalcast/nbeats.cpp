#include "vitalcast/nbeats.hpp"

#include <cmath>

namespace vitalcast {

void he_uniform_init(const TensorPtr& w, std::size_t fan_in, Rng& rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in));
    for (auto& v : w->data) v = limit * (2.0 * rng.next_double() - 1.0);
}

TensorPtr interpolation_matrix(std::size_t c, std::size_t horizon) {
    if (c == 0 || horizon == 0) throw ConfigError("interpolation needs c >= 1 and horizon >= 1");
    if (c > horizon)
        throw ConfigError("interpolation cannot reduce: c=" + std::to_string(c) + " > horizon=" +
                          std::to_string(horizon));
    auto m = zeros({c, horizon});
    if (c == 1) {
        for (std::size_t h = 0; h < horizon; ++h) m->at(0, h) = 1.0;
        return m;
    }
    // Knot j sits at j*(H-1)/(c-1); each output position blends its two
    // neighbours. The arithmetic keeps positions 0 and H-1 exactly on the
    // first and last knot.
    for (std::size_t h = 0; h < horizon; ++h) {
        const double x = static_cast<double>(h) * static_cast<double>(c - 1) /
                         static_cast<double>(horizon - 1);
        std::size_t j = static_cast<std::size_t>(x);
        double w = x - static_cast<double>(j);
        if (j >= c - 1) {
            j = c - 2;
            w = 1.0;
        }
        m->at(j, h) += 1.0 - w;
        m->at(j + 1, h) += w;
    }
    return m;
}

Block::Block(std::size_t input_dim_, std::size_t backcast_dim_, std::size_t coeff_dim_,
             std::size_t horizon_, std::size_t width_, Rng& rng)
    : input_dim(input_dim_), backcast_dim(backcast_dim_), coeff_dim(coeff_dim_),
      horizon(horizon_), width(width_) {
    if (coeff_dim == 0 || coeff_dim > horizon)
        throw ConfigError("block coefficient count must lie in [1, horizon]");
    std::size_t in = input_dim;
    for (int i = 0; i < 4; ++i) {
        fc_w[i] = zeros({in, width}, true);
        he_uniform_init(fc_w[i], in, rng);
        fc_b[i] = zeros({1, width}, true);
        in = width;
    }
    proj_b_w = zeros({width, backcast_dim}, true);
    he_uniform_init(proj_b_w, width, rng);
    proj_b_b = zeros({1, backcast_dim}, true);
    proj_f_w = zeros({width, coeff_dim}, true);
    he_uniform_init(proj_f_w, width, rng);
    proj_f_b = zeros({1, coeff_dim}, true);
    basis_b = identity(backcast_dim, true);
    basis_f = identity(horizon, true);
    if (coeff_dim < horizon) interp = interpolation_matrix(coeff_dim, horizon);
}

std::pair<TensorPtr, TensorPtr> Block::forward(Tape& tape, const TensorPtr& x) const {
    if (x->rank() != 2 || x->dim(0) != 1 || x->dim(1) != input_dim)
        throw ShapeError("block: expected input {1, " + std::to_string(input_dim) + "}, got " +
                         Tensor::shape_str(x->shape));
    TensorPtr h = x;
    for (int i = 0; i < 4; ++i) {
        h = tape.add(tape.matmul(h, fc_w[i]), fc_b[i]);
        if (i < 3) h = tape.relu(h);
    }
    const TensorPtr theta_b = tape.add(tape.matmul(h, proj_b_w), proj_b_b);
    const TensorPtr theta_f = tape.add(tape.matmul(h, proj_f_w), proj_f_b);
    const TensorPtr backcast = tape.matmul(theta_b, basis_b);
    TensorPtr f = theta_f;
    if (interp) f = tape.matmul(f, interp);
    const TensorPtr forecast = tape.matmul(f, basis_f);
    return {backcast, forecast};
}

void Block::collect_params(const std::string& prefix, std::vector<NamedParam>& out) {
    for (int i = 0; i < 4; ++i) {
        out.push_back({prefix + ".fc" + std::to_string(i + 1) + ".w", fc_w[i]});
        out.push_back({prefix + ".fc" + std::to_string(i + 1) + ".b", fc_b[i]});
    }
    out.push_back({prefix + ".proj_b.w", proj_b_w});
    out.push_back({prefix + ".proj_b.b", proj_b_b});
    out.push_back({prefix + ".proj_f.w", proj_f_w});
    out.push_back({prefix + ".proj_f.b", proj_f_b});
    out.push_back({prefix + ".basis_b", basis_b});
    out.push_back({prefix + ".basis_f", basis_f});
}

NBeatsForecaster::NBeatsForecaster(std::size_t channels, std::size_t history,
                                   std::size_t horizon, const ModelArch& arch, Rng& rng)
    : Forecaster(channels, history, horizon), arch_(arch) {
    if (arch.stacks == 0 || arch.blocks_per_stack == 0 || arch.width == 0)
        throw ConfigError("architecture needs positive stack count, block count, and width");
    const std::size_t flat = channels * history;
    stacks_.resize(arch.stacks);
    for (auto& stack : stacks_)
        for (std::size_t b = 0; b < arch.blocks_per_stack; ++b)
            stack.emplace_back(flat, flat, horizon, horizon, arch.width, rng);
}

ForecastResult NBeatsForecaster::forward(Tape& tape, const TensorPtr& input) {
    if (input->rank() != 2 || input->dim(0) != channels_ || input->dim(1) != history_)
        throw ShapeError("expected input {" + std::to_string(channels_) + ", " +
                         std::to_string(history_) + "}, got " + Tensor::shape_str(input->shape));
    TensorPtr residual = tape.reshape(input, {1, channels_ * history_});
    TensorPtr forecast;
    for (auto& stack : stacks_) {
        for (auto& block : stack) {
            auto [backcast, f] = block.forward(tape, residual);
            residual = tape.sub(residual, backcast);
            forecast = forecast ? tape.add(forecast, f) : f;
        }
    }
    return {forecast, residual};
}

std::vector<NamedParam> NBeatsForecaster::params() {
    std::vector<NamedParam> out;
    for (std::size_t s = 0; s < stacks_.size(); ++s)
        for (std::size_t b = 0; b < stacks_[s].size(); ++b)
            stacks_[s][b].collect_params(
                "s" + std::to_string(s) + ".b" + std::to_string(b), out);
    return out;
}

} // namespace vitalcast
