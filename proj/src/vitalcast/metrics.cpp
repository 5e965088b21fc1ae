#include "vitalcast/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "vitalcast/error.hpp"

namespace vitalcast {

double mse_horizon(std::span<const double> pred, std::span<const double> actual) {
    if (pred.size() != actual.size())
        throw ShapeError("mse_horizon: length mismatch " + std::to_string(pred.size()) + " vs " +
                         std::to_string(actual.size()));
    if (pred.empty()) throw ShapeError("mse_horizon: empty inputs");
    double acc = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double d = pred[i] - actual[i];
        acc += d * d;
    }
    return acc / static_cast<double>(pred.size());
}

double dtw_distance(std::span<const double> x, std::span<const double> y) {
    const std::size_t n = x.size();
    const std::size_t m = y.size();
    if (n == 0 || m == 0) throw ShapeError("dtw_distance: empty sequence");

    // Rolling rows of the (n+1) x (m+1) accumulated-cost table.
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> prev(m + 1, inf), curr(m + 1, inf);
    prev[0] = 0.0;
    for (std::size_t i = 1; i <= n; ++i) {
        curr[0] = inf;
        for (std::size_t j = 1; j <= m; ++j) {
            const double cost = std::abs(x[i - 1] - y[j - 1]);
            curr[j] = cost + std::min({prev[j], curr[j - 1], prev[j - 1]});
        }
        std::swap(prev, curr);
    }
    return prev[m];
}

std::vector<double> persistence_forecast(std::span<const double> input, std::size_t channels,
                                         std::size_t history, std::size_t target_index,
                                         std::size_t horizon) {
    if (input.size() != channels * history)
        throw ShapeError("persistence_forecast: input size " + std::to_string(input.size()) +
                         " != channels*history " + std::to_string(channels * history));
    if (target_index >= channels)
        throw ShapeError("persistence_forecast: target index out of range");
    if (history == 0 || horizon == 0)
        throw ShapeError("persistence_forecast: history and horizon must be positive");
    const double last = input[target_index * history + (history - 1)];
    return std::vector<double>(horizon, last);
}

std::string MetricsReport::to_csv() const {
    std::string out = "model,covariates,target,mse,mse_table,dtw,dtw_table,n_windows\n";
    char buf[512];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof(buf), "%s,%s,%s,%.10e,%.4f,%.10e,%.4f,%zu\n", r.model.c_str(),
                      r.covariates.c_str(), r.target.c_str(), r.mse, r.mse_table(), r.dtw,
                      r.dtw_table(), r.n_windows);
        out += buf;
    }
    return out;
}

} // namespace vitalcast
