#include "vitalcast/attention.hpp"

#include <cmath>

#include "vitalcast/nbeats.hpp" // he_uniform_init

namespace vitalcast {

AttentionParams::AttentionParams(std::size_t channels_, std::size_t history_,
                                 std::size_t horizon_, Rng& rng)
    : channels(channels_), history(history_), horizon(horizon_) {
    if (channels == 0 || history == 0 || horizon == 0)
        throw ConfigError("attention dims must be positive");
    for (std::size_t i = 0; i < channels; ++i) {
        w_k.push_back(zeros({history, history}, true));
        he_uniform_init(w_k.back(), history, rng);
        b_k.push_back(zeros({1, history}, true));
        w_v.push_back(zeros({history, history}, true));
        he_uniform_init(w_v.back(), history, rng);
    }
    w_q = zeros({horizon, horizon}, true);
    he_uniform_init(w_q, horizon, rng);
    b_q = zeros({1, horizon}, true);
    ln_gain = full({channels * horizon}, 1.0, true);
    ln_bias = zeros({channels * horizon}, true);
    // Zero output FC: the skip connection makes the wrapper start out as the
    // base model and training can only improve on it.
    fc_w = zeros({channels * horizon, horizon}, true);
    fc_b = zeros({1, horizon}, true);
}

void AttentionParams::collect_params(std::vector<NamedParam>& out) {
    for (std::size_t i = 0; i < channels; ++i) {
        const std::string s = std::to_string(i);
        out.push_back({"attn.k" + s + ".w", w_k[i]});
        out.push_back({"attn.k" + s + ".b", b_k[i]});
        out.push_back({"attn.v" + s + ".w", w_v[i]});
    }
    out.push_back({"attn.q.w", w_q});
    out.push_back({"attn.q.b", b_q});
    out.push_back({"attn.ln.gain", ln_gain});
    out.push_back({"attn.ln.bias", ln_bias});
    out.push_back({"attn.fc.w", fc_w});
    out.push_back({"attn.fc.b", fc_b});
}

QkvResult project_qkv(Tape& tape, const TensorPtr& input, const TensorPtr& base_forecast,
                      const AttentionParams& p) {
    if (input->rank() != 2 || input->dim(0) != p.channels || input->dim(1) != p.history)
        throw ShapeError("attention input must be {" + std::to_string(p.channels) + ", " +
                         std::to_string(p.history) + "}, got " +
                         Tensor::shape_str(input->shape));
    if (base_forecast->numel() != p.horizon)
        throw ShapeError("base forecast must have " + std::to_string(p.horizon) + " entries");
    QkvResult qkv;
    const TensorPtr yhat = tape.reshape(base_forecast, {1, p.horizon});
    qkv.q = tape.add(tape.matmul(yhat, p.w_q), p.b_q);
    for (std::size_t i = 0; i < p.channels; ++i) {
        const TensorPtr row =
            tape.reshape(tape.slice(input, i * p.history, p.history), {1, p.history});
        qkv.k.push_back(tape.add(tape.matmul(row, p.w_k[i]), p.b_k[i]));
        qkv.v.push_back(tape.matmul(row, p.w_v[i]));
    }
    return qkv;
}

AttentionWeights scaled_dot_attention(Tape& tape, const QkvResult& qkv, std::size_t history) {
    AttentionWeights w;
    const std::size_t horizon = qkv.q->numel();
    const TensorPtr q_col = tape.reshape(qkv.q, {horizon, 1});
    const double inv_sqrt_l = 1.0 / std::sqrt(static_cast<double>(history));
    for (std::size_t i = 0; i < qkv.k.size(); ++i) {
        const TensorPtr k_row = tape.reshape(qkv.k[i], {1, history});
        const TensorPtr scores = tape.scale(tape.matmul(q_col, k_row), inv_sqrt_l);
        const TensorPtr d = tape.softmax_rows(scores); // {H, L}
        const TensorPtr v_col = tape.reshape(qkv.v[i], {history, 1});
        w.d.push_back(d);
        w.o.push_back(tape.reshape(tape.matmul(d, v_col), {horizon}));
    }
    return w;
}

std::vector<double> attention_map(const AttentionWeights& w, const AttentionParams& p) {
    std::vector<double> a(p.channels * p.horizon * p.history, 0.0);
    for (std::size_t i = 0; i < p.channels; ++i) {
        const Tensor& d = *w.d[i];
        const Tensor& wv = *p.w_v[i];
        // A[i] = D[i] * |W_V[i]|^T: contract over the key index l; |W_V|^T
        // has entry (l, t) = |W_V(t, l)|.
        for (std::size_t h = 0; h < p.horizon; ++h)
            for (std::size_t t = 0; t < p.history; ++t) {
                double acc = 0.0;
                for (std::size_t l = 0; l < p.history; ++l)
                    acc += d.at(h, l) * std::abs(wv.at(t, l));
                a[(i * p.horizon + h) * p.history + t] = acc;
            }
    }
    return a;
}

AttentionForecaster::AttentionForecaster(std::unique_ptr<Forecaster> base, Rng& rng)
    : Forecaster(base->channels(), base->history(), base->horizon()), base_(std::move(base)),
      params_(channels_, history_, horizon_, rng) {}

ForecastResult AttentionForecaster::forward(Tape& tape, const TensorPtr& input) {
    AttentionArtifacts scratch;
    return forward_with_artifacts(tape, input, scratch);
}

ForecastResult AttentionForecaster::forward_with_artifacts(Tape& tape, const TensorPtr& input,
                                                           AttentionArtifacts& artifacts) {
    const ForecastResult base = base_->forward(tape, input);
    const QkvResult qkv = project_qkv(tape, input, base.forecast, params_);
    const AttentionWeights w = scaled_dot_attention(tape, qkv, history_);

    const TensorPtr o_flat = tape.concat(w.o); // {N*H}
    const TensorPtr z = tape.layer_norm(o_flat, params_.ln_gain, params_.ln_bias);
    const TensorPtr fc =
        tape.add(tape.matmul(tape.reshape(z, {1, channels_ * horizon_}), params_.fc_w),
                 params_.fc_b);
    const TensorPtr final_forecast = tape.add(fc, base.forecast);

    artifacts.channels = channels_;
    artifacts.history = history_;
    artifacts.horizon = horizon_;
    artifacts.weights.clear();
    artifacts.outputs.clear();
    for (std::size_t i = 0; i < channels_; ++i) {
        artifacts.weights.insert(artifacts.weights.end(), w.d[i]->data.begin(),
                                 w.d[i]->data.end());
        artifacts.outputs.insert(artifacts.outputs.end(), w.o[i]->data.begin(),
                                 w.o[i]->data.end());
    }
    artifacts.map = attention_map(w, params_);
    return {final_forecast, base.residual};
}

std::vector<NamedParam> AttentionForecaster::params() {
    std::vector<NamedParam> out = base_->params();
    params_.collect_params(out);
    return out;
}

} // namespace vitalcast
