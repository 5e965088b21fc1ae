#include "vitalcast/gradsuite.hpp"

#include <cmath>
#include <functional>

#include "vitalcast/attention.hpp"
#include "vitalcast/gradcheck.hpp"
#include "vitalcast/nbeats.hpp"
#include "vitalcast/nhits.hpp"
#include "vitalcast/rng.hpp"
#include "vitalcast/tensor.hpp"

namespace vitalcast {

namespace {

constexpr double kOpTol = 1e-4;
constexpr double kModelTol = 1e-3;

TensorPtr random_tensor(std::vector<std::size_t> shape, Rng& rng, bool requires_grad = true) {
    auto t = zeros(std::move(shape), requires_grad);
    for (auto& v : t->data) v = rng.uniform(-1.0, 1.0);
    return t;
}

/// Uniform values whose magnitude stays >= 0.05, so a 1e-5 finite-difference
/// probe cannot cross the relu/abs kink at zero.
TensorPtr random_kink_safe(std::vector<std::size_t> shape, Rng& rng,
                           bool requires_grad = true) {
    auto t = zeros(std::move(shape), requires_grad);
    for (auto& v : t->data) {
        const double mag = 0.05 + 0.95 * rng.next_double();
        v = rng.next_double() < 0.5 ? -mag : mag;
    }
    return t;
}

/// Distinct well-separated values, so pooling argmaxes are stable under the
/// finite-difference probe.
TensorPtr random_pool_safe(std::size_t n, Rng& rng) {
    auto t = zeros({n}, true);
    std::vector<double> grid(n);
    for (std::size_t i = 0; i < n; ++i)
        grid[i] = 0.1 * static_cast<double>(i) + 0.04 * rng.next_double();
    shuffle(grid, rng);
    t->data = grid;
    return t;
}

using Fixture = std::function<GradCheckReport(Rng&)>;

void run_item(GradSuiteResult& result, const std::string& name, double tol, Rng& rng,
              std::size_t trials, const Fixture& fixture) {
    GradSuiteResult::Item item;
    item.name = name;
    item.tolerance = tol;
    for (std::size_t t = 0; t < trials; ++t) {
        const GradCheckReport rep = fixture(rng);
        item.worst = std::max(item.worst, rep.worst());
        if (!rep.passed) item.passed = false;
    }
    if (!item.passed) result.passed = false;
    result.items.push_back(std::move(item));
}

GradCheckReport check_against_target(const TensorPtr& target,
                                     const std::vector<NamedParam>& params,
                                     const std::function<TensorPtr(Tape&)>& value,
                                     double tol) {
    return grad_check(
        [&](Tape& tape) { return tape.mse_loss(value(tape), target); }, params, tol);
}

// Small magnitudes keep every pre-softmax score in the smooth regime.  With
// wider draws the stacked blocks amplify the forecast into the hundreds, the
// attention scores saturate, and softmax backward returns an exact zero while
// finite differences land on argmax-flip cliffs.
void randomize_params(const std::vector<NamedParam>& params, Rng& rng) {
    for (const auto& p : params)
        for (auto& v : p.tensor->data) v = rng.uniform(-0.25, 0.25);
}

GradCheckReport wrapped_model_check(ModelKind kind, Rng& rng) {
    const std::size_t channels = 2, history = 8, horizon = 4;
    ModelArch arch;
    arch.stacks = 2;
    arch.blocks_per_stack = kind == ModelKind::NBeats ? 2 : 1;
    arch.width = 16;
    if (kind == ModelKind::NHits) {
        arch.kernels = {2, 1};
        arch.ratios = {2, 1};
    }

    Rng init(rng.next_u64());
    std::unique_ptr<Forecaster> base;
    if (kind == ModelKind::NBeats)
        base = std::make_unique<NBeatsForecaster>(channels, history, horizon, arch, init);
    else
        base = std::make_unique<NHitsForecaster>(channels, history, horizon, arch, init);
    AttentionForecaster model(std::move(base), init);

    // Every parameter randomized, including the zero-initialized output FC:
    // an identically-zero layer would hide wrong gradients behind 0 == 0.
    const std::vector<NamedParam> params = model.params();
    randomize_params(params, rng);

    const TensorPtr input = random_kink_safe({channels, history}, rng, false);
    const TensorPtr target = random_tensor({1, horizon}, rng, false);
    return grad_check(
        [&](Tape& tape) {
            return tape.mse_loss(model.forward(tape, input).forecast, target);
        },
        params, kModelTol);
}

} // namespace

GradSuiteResult run_gradient_suite(std::uint64_t seed, std::size_t trials) {
    GradSuiteResult result;
    Rng rng(Rng::derive(seed, 7));

    run_item(result, "relu", kOpTol, rng, trials, [](Rng& r) {
        const auto x = random_kink_safe({3, 4}, r);
        const auto t = random_tensor({3, 4}, r, false);
        return check_against_target(t, {{"x", x}}, [&](Tape& tp) { return tp.relu(x); },
                                    kOpTol);
    });
    run_item(result, "abs", kOpTol, rng, trials, [](Rng& r) {
        const auto x = random_kink_safe({2, 5}, r);
        const auto t = random_tensor({2, 5}, r, false);
        return check_against_target(t, {{"x", x}}, [&](Tape& tp) { return tp.abs(x); }, kOpTol);
    });
    run_item(result, "add", kOpTol, rng, trials, [](Rng& r) {
        const auto a = random_tensor({2, 3}, r);
        const auto b = random_tensor({2, 3}, r);
        const auto t = random_tensor({2, 3}, r, false);
        return check_against_target(t, {{"a", a}, {"b", b}},
                                    [&](Tape& tp) { return tp.add(a, b); }, kOpTol);
    });
    run_item(result, "sub", kOpTol, rng, trials, [](Rng& r) {
        const auto a = random_tensor({2, 3}, r);
        const auto b = random_tensor({2, 3}, r);
        const auto t = random_tensor({2, 3}, r, false);
        return check_against_target(t, {{"a", a}, {"b", b}},
                                    [&](Tape& tp) { return tp.sub(a, b); }, kOpTol);
    });
    run_item(result, "scale", kOpTol, rng, trials, [](Rng& r) {
        const auto x = random_tensor({4}, r);
        const double c = r.uniform(0.5, 2.0);
        const auto t = random_tensor({4}, r, false);
        return check_against_target(t, {{"x", x}}, [&, c](Tape& tp) { return tp.scale(x, c); },
                                    kOpTol);
    });
    run_item(result, "reshape", kOpTol, rng, trials, [](Rng& r) {
        const auto x = random_tensor({2, 6}, r);
        const auto t = random_tensor({3, 4}, r, false);
        return check_against_target(
            t, {{"x", x}}, [&](Tape& tp) { return tp.reshape(x, {3, 4}); }, kOpTol);
    });
    run_item(result, "slice", kOpTol, rng, trials, [](Rng& r) {
        const auto x = random_tensor({10}, r);
        const auto t = random_tensor({5}, r, false);
        return check_against_target(t, {{"x", x}},
                                    [&](Tape& tp) { return tp.slice(x, 3, 5); }, kOpTol);
    });
    run_item(result, "concat", kOpTol, rng, trials, [](Rng& r) {
        const auto a = random_tensor({3}, r);
        const auto b = random_tensor({4}, r);
        const auto c = random_tensor({2}, r);
        const auto t = random_tensor({9}, r, false);
        return check_against_target(t, {{"a", a}, {"b", b}, {"c", c}},
                                    [&](Tape& tp) { return tp.concat({a, b, c}); }, kOpTol);
    });
    run_item(result, "matmul", kOpTol, rng, trials, [](Rng& r) {
        const auto a = random_tensor({3, 4}, r);
        const auto b = random_tensor({4, 2}, r);
        const auto t = random_tensor({3, 2}, r, false);
        return check_against_target(t, {{"a", a}, {"b", b}},
                                    [&](Tape& tp) { return tp.matmul(a, b); }, kOpTol);
    });
    run_item(result, "sum", kOpTol, rng, trials, [](Rng& r) {
        const auto x = random_tensor({3, 3}, r);
        return grad_check([&](Tape& tp) { return tp.sum(x); }, {{"x", x}}, kOpTol);
    });
    run_item(result, "softmax_rows", kOpTol, rng, trials, [](Rng& r) {
        const auto x = random_tensor({3, 4}, r);
        const auto t = random_tensor({3, 4}, r, false);
        return check_against_target(t, {{"x", x}},
                                    [&](Tape& tp) { return tp.softmax_rows(x); }, kOpTol);
    });
    run_item(result, "maxpool1d", kOpTol, rng, trials, [](Rng& r) {
        const auto x = random_pool_safe(9, r);
        const auto t = random_tensor({5}, r, false);
        return check_against_target(t, {{"x", x}},
                                    [&](Tape& tp) { return tp.maxpool1d(x, 2); }, kOpTol);
    });
    run_item(result, "layer_norm", kOpTol, rng, trials, [](Rng& r) {
        // Spread base values keep the variance away from zero.
        const auto x = zeros({6}, true);
        for (std::size_t i = 0; i < 6; ++i)
            x->data[i] = 0.4 * static_cast<double>(i) - 1.0 + 0.1 * r.uniform(-1.0, 1.0);
        const auto gain = random_tensor({6}, r);
        const auto bias = random_tensor({6}, r);
        const auto t = random_tensor({6}, r, false);
        return check_against_target(
            t, {{"x", x}, {"gain", gain}, {"bias", bias}},
            [&](Tape& tp) { return tp.layer_norm(x, gain, bias); }, kOpTol);
    });
    run_item(result, "mse_loss", kOpTol, rng, trials, [](Rng& r) {
        const auto pred = random_tensor({5}, r);
        const auto target = random_tensor({5}, r);
        return grad_check([&](Tape& tp) { return tp.mse_loss(pred, target); },
                          {{"pred", pred}, {"target", target}}, kOpTol);
    });

    run_item(result, "nbeats+attention", kModelTol, rng, trials,
             [](Rng& r) { return wrapped_model_check(ModelKind::NBeats, r); });
    run_item(result, "nhits+attention", kModelTol, rng, trials,
             [](Rng& r) { return wrapped_model_check(ModelKind::NHits, r); });

    return result;
}

} // namespace vitalcast
