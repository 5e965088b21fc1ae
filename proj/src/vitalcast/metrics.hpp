#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace vitalcast {

/// Mean squared error over a forecast horizon.
double mse_horizon(std::span<const double> pred, std::span<const double> actual);

/// Classic dynamic time warping distance with pointwise cost |x_i - y_j|,
/// no window constraint and no normalization.
double dtw_distance(std::span<const double> x, std::span<const double> y);

/// Repeats the last observed value of the target channel across the horizon.
/// `input` is row-major with `channels` rows of length `history`.
std::vector<double> persistence_forecast(std::span<const double> input, std::size_t channels,
                                         std::size_t history, std::size_t target_index,
                                         std::size_t horizon);

/// One evaluated configuration: mean MSE and DTW over its test windows.
/// Table-style values are the raw metrics rescaled by 1e-4 and 1e-3.
struct MetricsRow {
    std::string model;
    std::string covariates; // "with", "without", or "-"
    std::string target;
    double mse = 0.0;
    double dtw = 0.0;
    std::size_t n_windows = 0;

    double mse_table() const { return mse / 1e-4; }
    double dtw_table() const { return dtw / 1e-3; }
};

struct MetricsReport {
    std::vector<MetricsRow> rows;

    /// Renders the report as CSV with a fixed header and fixed formatting,
    /// so identical inputs give identical bytes.
    std::string to_csv() const;
};

} // namespace vitalcast
