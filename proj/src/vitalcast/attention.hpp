#pragma once

#include <cstddef>
#include <memory>
#include <vector>

#include "vitalcast/forecaster.hpp"
#include "vitalcast/rng.hpp"
#include "vitalcast/tensor.hpp"

namespace vitalcast {

/// Parameters of the interpretability head. Keys and values are built per
/// input series with their own L x L maps (values carry no bias); the query
/// is an affine map of the base forecast. A layer norm, a skip connection,
/// and an output FC (zero at init, so the wrapper starts out exactly equal to
/// the base model) produce the final forecast.
struct AttentionParams {
    std::size_t channels = 0; // N
    std::size_t history = 0;  // L
    std::size_t horizon = 0;  // H

    std::vector<TensorPtr> w_k; // per series {L, L}
    std::vector<TensorPtr> b_k; // per series {1, L}
    std::vector<TensorPtr> w_v; // per series {L, L}, no bias
    TensorPtr w_q;              // {H, H}
    TensorPtr b_q;              // {1, H}
    TensorPtr ln_gain;          // {N*H}
    TensorPtr ln_bias;          // {N*H}
    TensorPtr fc_w;             // {N*H, H}
    TensorPtr fc_b;             // {1, H}

    AttentionParams() = default;
    AttentionParams(std::size_t channels, std::size_t history, std::size_t horizon, Rng& rng);

    void collect_params(std::vector<NamedParam>& out);
};

/// Per-window attention read-outs, detached from the tape. Layout is
/// row-major [series][forecast_step][history_step] for the H x L planes.
struct AttentionArtifacts {
    std::size_t channels = 0;
    std::size_t history = 0;
    std::size_t horizon = 0;
    std::vector<double> weights; // D, N*H*L, rows sum to 1
    std::vector<double> outputs; // O, N*H
    std::vector<double> map;     // A = D * |W_V|^T, N*H*L, nonnegative

    double weight(std::size_t i, std::size_t h, std::size_t l) const {
        return weights[(i * horizon + h) * history + l];
    }
    double map_at(std::size_t i, std::size_t h, std::size_t l) const {
        return map[(i * horizon + h) * history + l];
    }
};

struct QkvResult {
    TensorPtr q;                // {1, H}
    std::vector<TensorPtr> k;   // per series {1, L}
    std::vector<TensorPtr> v;   // per series {1, L}
};

/// K[i] = I[i]*W_K[i] + b_K[i]; V[i] = I[i]*W_V[i]; Q = y_hat*W_Q + b_Q.
QkvResult project_qkv(Tape& tape, const TensorPtr& input, const TensorPtr& base_forecast,
                      const AttentionParams& p);

struct AttentionWeights {
    std::vector<TensorPtr> d; // per series {H, L}, softmax rows
    std::vector<TensorPtr> o; // per series {H}
};

/// Scores are the outer product of the H scalar queries with the L scalar
/// keys of each series, scaled by 1/sqrt(L); D is the row softmax and O its
/// value-weighted read-out.
AttentionWeights scaled_dot_attention(Tape& tape, const QkvResult& qkv, std::size_t history);

/// A[i] = D[i] * |W_V[i]|^T. Reporting only; computed outside the tape.
std::vector<double> attention_map(const AttentionWeights& w, const AttentionParams& p);

/// Wraps any base forecaster with the attention head. The final forecast is
/// FC(layer_norm(concat O)) + base forecast.
class AttentionForecaster : public Forecaster {
public:
    AttentionForecaster(std::unique_ptr<Forecaster> base, Rng& rng);

    ForecastResult forward(Tape& tape, const TensorPtr& input) override;
    ForecastResult forward_with_artifacts(Tape& tape, const TensorPtr& input,
                                          AttentionArtifacts& artifacts);
    std::vector<NamedParam> params() override;

    Forecaster& base() { return *base_; }
    AttentionParams& attention() { return params_; }

private:
    std::unique_ptr<Forecaster> base_;
    AttentionParams params_;
};

} // namespace vitalcast
