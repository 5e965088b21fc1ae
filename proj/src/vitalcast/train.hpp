#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "vitalcast/attention.hpp"
#include "vitalcast/data.hpp"
#include "vitalcast/forecaster.hpp"
#include "vitalcast/metrics.hpp"

namespace vitalcast {

/// Everything a training run depends on. Architecture fields left at zero or
/// empty fall back to the per-kind defaults, so a config names only what it
/// overrides.
struct TrainConfig {
    ModelKind model_kind = ModelKind::NBeats;
    bool attention = false;
    Channel target = Channel::HR;
    std::vector<Channel> covariates;

    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    std::size_t batch_size = 32;
    std::size_t max_epochs = 100;
    std::size_t patience = 10;
    double grad_clip = 5.0;
    std::uint64_t seed = 0;
    std::size_t history = 72;
    std::size_t horizon = 36;

    std::size_t stacks = 0;
    std::size_t blocks_per_stack = 0;
    std::size_t width = 0;
    std::vector<std::size_t> kernels;
    std::vector<std::size_t> ratios;

    std::size_t num_channels() const { return 1 + covariates.size(); }
    ModelArch resolved_arch() const;
    void validate() const;
};

/// Applies `key = value` lines from a flat text file onto a config. Lines
/// starting with '#' and blank lines are skipped. Unknown keys are errors so
/// typos do not silently train the wrong model.
void apply_config_file(TrainConfig& cfg, const std::string& path);
/// Applies one key/value pair. Shared by the file parser and CLI overrides.
void apply_config_entry(TrainConfig& cfg, const std::string& key, const std::string& value);

/// A trained forecaster together with how it was trained and how training
/// went. `best_epoch` indexes the loss histories.
struct TrainedModel {
    TrainConfig config;
    std::unique_ptr<Forecaster> model;
    std::vector<double> train_loss;
    std::vector<double> val_loss;
    std::size_t best_epoch = 0;
};

/// Builds an untrained model for the config, parameters seeded from the
/// config seed.
std::unique_ptr<Forecaster> build_model(const TrainConfig& cfg);

/// Adam over shuffled mini-batches with gradient clipping and early
/// stopping; restores the best-validation parameters before returning.
/// Identical config and data give an identical model and loss history.
TrainedModel train_model(const TrainConfig& cfg, const SplitDataset& data);

/// Mean MSE and DTW of an arbitrary forecast function over a window set.
struct EvalStats {
    double mse = 0.0;
    double dtw = 0.0;
    std::size_t n_windows = 0;
};
EvalStats evaluate_forecasts(const std::function<std::vector<double>(const Window&)>& forecast_fn,
                             const WindowSet& windows);

/// Runs the trained model over the windows and reports it next to the
/// persistence baseline on the same windows (baseline row first).
MetricsReport evaluate_model(TrainedModel& trained, const WindowSet& windows);

/// Row label used in reports, e.g. "nhits+attention".
std::string model_label(const TrainConfig& cfg);

/// Forecasts one window on a fresh non-recording tape.
std::vector<double> forecast_window(Forecaster& model, const Window& window);

/// Writes forecast.csv, attention.csv, attention_mean.csv, and attention.svg
/// for one window. The model must carry the attention head.
void explain_window(TrainedModel& trained, const Window& window, const std::string& out_dir);

/// Trains the full eight-configuration grid (two base models, attention
/// on/off, covariates on/off) against one target and reports each
/// configuration next to the shared persistence baseline. Per-config seeds
/// derive from `seed` and the configuration index; configurations run
/// sequentially.
MetricsReport run_benchmark(const std::vector<PatientSeries>& cohort, Channel target,
                            std::uint64_t seed, std::size_t history = 72,
                            std::size_t horizon = 36,
                            const std::function<void(const std::string&)>& progress = nullptr);

/// The grid's covariate choice for a target: the two remaining channels.
std::vector<Channel> benchmark_covariates(Channel target);

/// Selects input rows of a full-channel window set for a reduced channel
/// list. Row 0 (the target) is always kept.
WindowSet project_channels(const WindowSet& full, const std::vector<Channel>& covariates);

void write_text_file(const std::string& path, const std::string& content);

} // namespace vitalcast
