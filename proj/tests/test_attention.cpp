#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <memory>

#include "vitalcast/attention.hpp"
#include "vitalcast/nbeats.hpp"
#include "vitalcast/rng.hpp"

using namespace vitalcast;

namespace {

constexpr std::size_t N = 2, L = 4, H = 3;

AttentionParams random_params(std::uint64_t seed) {
    Rng rng(seed);
    AttentionParams p(N, L, H, rng);
    for (auto& b : p.b_k)
        for (auto& v : b->data) v = rng.uniform(-0.5, 0.5);
    for (auto& v : p.b_q->data) v = rng.uniform(-0.5, 0.5);
    return p;
}

TensorPtr random_input(Rng& rng) {
    auto x = zeros({N, L});
    for (auto& v : x->data) v = rng.uniform(-1.0, 1.0);
    return x;
}

TensorPtr random_forecast(Rng& rng) {
    auto y = zeros({1, H});
    for (auto& v : y->data) v = rng.uniform(-1.0, 1.0);
    return y;
}

void set_identity(const TensorPtr& m) {
    for (std::size_t i = 0; i < m->shape[0]; ++i)
        for (std::size_t j = 0; j < m->shape[1]; ++j) m->at(i, j) = (i == j ? 1.0 : 0.0);
}

std::unique_ptr<NBeatsForecaster> tiny_base(std::uint64_t seed) {
    ModelArch arch;
    arch.stacks = 1;
    arch.blocks_per_stack = 1;
    arch.width = 8;
    Rng rng(seed);
    return std::make_unique<NBeatsForecaster>(N, L, H, arch, rng);
}

} // namespace

TEST_CASE("qkv projections compute their affine maps") {
    Rng rng(1);
    AttentionParams p(2, 2, 2, rng); // N=2, L=2, H=2
    p.w_k[0]->data = {1, 2, 3, 4};
    p.b_k[0]->data = {10, 20};
    p.w_v[0]->data = {5, 6, 7, 8};
    p.w_q->data = {1, 0, 0, 2};
    p.b_q->data = {0.5, -0.5};

    auto input = tensor_of({2, 2}, {1.0, 1.0, 2.0, 3.0});
    auto yhat = tensor_of({1, 2}, {3.0, 4.0});
    Tape tape(false);
    QkvResult qkv = project_qkv(tape, input, yhat, p);

    CHECK(qkv.k[0]->data == std::vector<double>{14.0, 26.0}); // [1,1] W_K + b_K
    CHECK(qkv.v[0]->data == std::vector<double>{12.0, 14.0}); // [1,1] W_V, no bias
    CHECK(qkv.q->data == std::vector<double>{3.5, 7.5});      // yhat W_Q + b_Q

    CHECK_THROWS_AS(project_qkv(tape, tensor_of({2, 3}, {0, 0, 0, 0, 0, 0}), yhat, p),
                    ShapeError);
}

TEST_CASE("zero query attends uniformly") {
    AttentionParams p = random_params(11);
    for (auto& v : p.w_q->data) v = 0.0;
    for (auto& v : p.b_q->data) v = 0.0;
    for (std::size_t i = 0; i < N; ++i) set_identity(p.w_v[i]);

    Rng rng(12);
    auto input = random_input(rng);
    Tape tape(false);
    QkvResult qkv = project_qkv(tape, input, random_forecast(rng), p);
    AttentionWeights w = scaled_dot_attention(tape, qkv, L);

    for (std::size_t i = 0; i < N; ++i) {
        for (double v : w.d[i]->data) CHECK(v == doctest::Approx(0.25).epsilon(1e-12));
        // With identity values, each read-out is the mean of the input row.
        double mean = 0.0;
        for (std::size_t l = 0; l < L; ++l) mean += input->at(i, l);
        mean /= static_cast<double>(L);
        for (std::size_t h = 0; h < H; ++h)
            CHECK(w.o[i]->at(h) == doctest::Approx(mean).epsilon(1e-12));
    }
}

TEST_CASE("constant keys attend uniformly") {
    AttentionParams p = random_params(21);
    for (std::size_t i = 0; i < N; ++i) {
        for (auto& v : p.w_k[i]->data) v = 0.0;
        for (auto& v : p.b_k[i]->data) v = 0.7; // any constant
    }
    Rng rng(22);
    Tape tape(false);
    QkvResult qkv = project_qkv(tape, random_input(rng), random_forecast(rng), p);
    AttentionWeights w = scaled_dot_attention(tape, qkv, L);
    for (std::size_t i = 0; i < N; ++i)
        for (double v : w.d[i]->data) CHECK(v == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("attention rows are probability distributions") {
    Rng rng(31);
    for (int trial = 0; trial < 10; ++trial) {
        AttentionParams p = random_params(100 + static_cast<std::uint64_t>(trial));
        Tape tape(false);
        QkvResult qkv = project_qkv(tape, random_input(rng), random_forecast(rng), p);
        AttentionWeights w = scaled_dot_attention(tape, qkv, L);
        for (std::size_t i = 0; i < N; ++i)
            for (std::size_t h = 0; h < H; ++h) {
                double row = 0.0;
                for (std::size_t l = 0; l < L; ++l) {
                    CHECK(w.d[i]->at(h, l) >= 0.0);
                    row += w.d[i]->at(h, l);
                }
                CHECK(std::fabs(row - 1.0) <= 1e-9);
            }
    }
}

TEST_CASE("attention map contracts weights against |W_V| transposed") {
    Rng rng(41);
    AttentionParams p = random_params(42);
    Tape tape(false);
    QkvResult qkv = project_qkv(tape, random_input(rng), random_forecast(rng), p);
    AttentionWeights w = scaled_dot_attention(tape, qkv, L);
    auto a = attention_map(w, p);

    for (std::size_t i = 0; i < N; ++i)
        for (std::size_t h = 0; h < H; ++h)
            for (std::size_t t = 0; t < L; ++t) {
                double want = 0.0;
                for (std::size_t l = 0; l < L; ++l)
                    want += w.d[i]->at(h, l) * std::fabs(p.w_v[i]->at(t, l));
                CHECK(a[(i * H + h) * L + t] == doctest::Approx(want).epsilon(1e-14));
                CHECK(a[(i * H + h) * L + t] >= 0.0);
            }
}

TEST_CASE("identity values make the map equal the weights") {
    Rng rng(51);
    AttentionParams p = random_params(52);
    for (std::size_t i = 0; i < N; ++i) set_identity(p.w_v[i]);
    Tape tape(false);
    QkvResult qkv = project_qkv(tape, random_input(rng), random_forecast(rng), p);
    AttentionWeights w = scaled_dot_attention(tape, qkv, L);
    auto a = attention_map(w, p);
    for (std::size_t i = 0; i < N; ++i)
        for (std::size_t h = 0; h < H; ++h)
            for (std::size_t l = 0; l < L; ++l)
                CHECK(std::fabs(a[(i * H + h) * L + l] - w.d[i]->at(h, l)) <= 1e-12);

    // Doubling the values doubles the attributed mass.
    for (std::size_t i = 0; i < N; ++i)
        for (auto& v : p.w_v[i]->data) v *= 2.0;
    auto a2 = attention_map(w, p);
    for (std::size_t j = 0; j < a.size(); ++j)
        CHECK(a2[j] == doctest::Approx(2.0 * a[j]).epsilon(1e-12));
}

TEST_CASE("swapping series swaps attention panels") {
    AttentionParams p = random_params(61);
    AttentionParams q = random_params(61);
    std::swap(q.w_k[0], q.w_k[1]);
    std::swap(q.b_k[0], q.b_k[1]);
    std::swap(q.w_v[0], q.w_v[1]);

    Rng rng(62);
    auto input = random_input(rng);
    auto yhat = random_forecast(rng);
    auto swapped = zeros({N, L});
    for (std::size_t l = 0; l < L; ++l) {
        swapped->at(0, l) = input->at(1, l);
        swapped->at(1, l) = input->at(0, l);
    }

    Tape tape(false);
    AttentionWeights wp = scaled_dot_attention(tape, project_qkv(tape, input, yhat, p), L);
    AttentionWeights wq = scaled_dot_attention(tape, project_qkv(tape, swapped, yhat, q), L);
    CHECK(wp.d[0]->data == wq.d[1]->data);
    CHECK(wp.d[1]->data == wq.d[0]->data);
    CHECK(wp.o[0]->data == wq.o[1]->data);
    CHECK(wp.o[1]->data == wq.o[0]->data);
}

TEST_CASE("freshly wrapped model equals its base") {
    for (std::uint64_t seed : {3u, 4u, 5u}) {
        auto bare = tiny_base(seed);
        Rng head(900 + seed);
        AttentionForecaster wrapped(tiny_base(seed), head);

        Rng in(70 + seed);
        auto x = random_input(in);
        Tape ta(false), tb(false);
        auto fw = wrapped.forward(ta, x).forecast;
        auto fb = bare->forward(tb, x).forecast;
        for (std::size_t h = 0; h < H; ++h)
            CHECK(std::fabs(fw->at(0, h) - fb->at(0, h)) <= 1e-12);
    }
}

TEST_CASE("artifacts carry weights, outputs, and map per series") {
    Rng head(81);
    AttentionForecaster wrapped(tiny_base(80), head);
    Rng in(82);
    auto x = random_input(in);
    Tape tape;
    AttentionArtifacts art;
    auto result = wrapped.forward_with_artifacts(tape, x, art);
    CHECK(result.forecast->shape == std::vector<std::size_t>{1, H});
    CHECK(art.channels == N);
    CHECK(art.history == L);
    CHECK(art.horizon == H);
    CHECK(art.weights.size() == N * H * L);
    CHECK(art.outputs.size() == N * H);
    CHECK(art.map.size() == N * H * L);
    for (std::size_t i = 0; i < N; ++i)
        for (std::size_t h = 0; h < H; ++h) {
            double row = 0.0;
            for (std::size_t l = 0; l < L; ++l) row += art.weight(i, h, l);
            CHECK(row == doctest::Approx(1.0).epsilon(1e-9));
        }
}

TEST_CASE("wrapper parameter list appends the head after the base") {
    Rng head(91);
    AttentionForecaster wrapped(tiny_base(90), head);
    auto params = wrapped.params();
    // Tiny base: 1 stack x 1 block x 14 tensors, then the head.
    REQUIRE(params.size() == 14 + 3 * N + 6);
    CHECK(params[0].name == "s0.b0.fc1.w");
    CHECK(params[14].name == "attn.k0.w");
    CHECK(params[15].name == "attn.k0.b");
    CHECK(params[16].name == "attn.v0.w");
    CHECK(params[17].name == "attn.k1.w");
    CHECK(params[params.size() - 2].name == "attn.fc.w");
    CHECK(params.back().name == "attn.fc.b");
}
