// Command-line front end: synthetic data generation, training, evaluation,
// attention-map export, and the benchmark grid.

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "vitalcast/data.hpp"
#include "vitalcast/error.hpp"
#include "vitalcast/gradsuite.hpp"
#include "vitalcast/serialize.hpp"
#include "vitalcast/train.hpp"

namespace {

using namespace vitalcast;

WindowSet model_windows(const TrainedModel& m, const std::string& data_path) {
    const auto cohort = load_series_csv(data_path);
    std::vector<PatientSeries> prepared;
    prepared.reserve(cohort.size());
    for (const auto& s : cohort) prepared.push_back(clip_and_scale(impute_fill(s)));
    return build_windows(prepared, m.config.target, m.config.covariates, m.config.history,
                         m.config.horizon);
}

const Window& window_at(const WindowSet& set, std::size_t index) {
    if (index >= set.windows.size())
        throw UsageError("window index " + std::to_string(index) + " out of range; the data has " +
                         std::to_string(set.windows.size()) + " windows for this model");
    return set.windows[index];
}

int run(int argc, char** argv) {
    CLI::App app{"Interpretable multivariate vital-sign forecasting toolkit"};
    app.require_subcommand(1);

    // synth
    auto* synth = app.add_subcommand("synth", "Generate a synthetic vital-sign CSV");
    std::string synth_out;
    std::size_t synth_patients = 0;
    std::uint64_t synth_seed = 0;
    std::size_t synth_hours = 9;
    synth->add_option("--out", synth_out, "Output CSV path")->required();
    synth->add_option("--patients", synth_patients, "Number of patients")->required();
    synth->add_option("--seed", synth_seed, "PRNG seed")->required();
    synth->add_option("--hours", synth_hours, "Hours of data per patient (12 steps/hour)");

    // train
    auto* train = app.add_subcommand("train", "Train a forecaster");
    std::string train_data, train_model_name, train_attention, train_target, train_covariates,
        train_config, train_out;
    std::uint64_t train_seed = 0;
    train->add_option("--data", train_data, "Training CSV")->required();
    train->add_option("--model", train_model_name, "nbeats or nhits")->required();
    train->add_option("--attention", train_attention, "on or off")->required();
    train->add_option("--target", train_target, "Target channel: HR, MBP, or RR")->required();
    auto* cov_opt = train->add_option("--covariates", train_covariates,
                                      "Comma-separated covariate channels, e.g. HR,RR");
    train->add_option("--config", train_config, "Flat key = value config file");
    train->add_option("--out", train_out, "Output model file")->required();
    train->add_option("--seed", train_seed, "Training seed")->required();

    // evaluate
    auto* evaluate = app.add_subcommand("evaluate", "Evaluate a trained model on a CSV");
    std::string eval_model, eval_data, eval_report;
    evaluate->add_option("--model", eval_model, "Model file")->required();
    evaluate->add_option("--data", eval_data, "Data CSV")->required();
    evaluate->add_option("--report", eval_report, "Report CSV to write")->required();

    // explain
    auto* explain = app.add_subcommand("explain", "Export attention maps for one window");
    std::string explain_model, explain_data, explain_dir;
    std::size_t explain_window_idx = 0;
    explain->add_option("--model", explain_model, "Model file")->required();
    explain->add_option("--data", explain_data, "Data CSV")->required();
    explain->add_option("--window", explain_window_idx, "Window index")->required();
    explain->add_option("--out-dir", explain_dir, "Output directory")->required();

    // forecast
    auto* forecast = app.add_subcommand("forecast", "Forecast one window");
    std::string fc_model, fc_data, fc_out;
    std::size_t fc_window_idx = 0;
    forecast->add_option("--model", fc_model, "Model file")->required();
    forecast->add_option("--data", fc_data, "Data CSV")->required();
    forecast->add_option("--window", fc_window_idx, "Window index")->required();
    forecast->add_option("--out", fc_out, "Output CSV")->required();

    // benchmark
    auto* benchmark = app.add_subcommand("benchmark", "Run the full model grid on one target");
    std::string bm_data, bm_target, bm_report;
    std::uint64_t bm_seed = 0;
    benchmark->add_option("--data", bm_data, "Data CSV")->required();
    benchmark->add_option("--target", bm_target, "Target channel: HR or MBP")->required();
    benchmark->add_option("--report", bm_report, "Report CSV to write")->required();
    benchmark->add_option("--seed", bm_seed, "Benchmark seed")->required();

    // gradcheck
    auto* gradcheck = app.add_subcommand("gradcheck", "Run the gradient-check suite");
    std::uint64_t gc_seed = 1;
    gradcheck->add_option("--seed", gc_seed, "Suite seed");

    CLI11_PARSE(app, argc, argv);

    if (synth->parsed()) {
        GeneratorOptions opt;
        opt.patients = synth_patients;
        opt.hours = synth_hours;
        opt.seed = synth_seed;
        const auto cohort = generate_synthetic(opt);
        write_series_csv(synth_out, cohort);
        std::size_t steps = cohort.empty() ? 0 : cohort[0].length();
        std::cout << "wrote " << cohort.size() << " patients x " << steps << " steps to "
                  << synth_out << "\n";
        return 0;
    }

    if (train->parsed()) {
        TrainConfig cfg;
        if (!train_config.empty()) apply_config_file(cfg, train_config);
        // Explicit flags win over the config file.
        apply_config_entry(cfg, "model", train_model_name);
        apply_config_entry(cfg, "attention", train_attention);
        apply_config_entry(cfg, "target", train_target);
        if (cov_opt->count() > 0) apply_config_entry(cfg, "covariates", train_covariates);
        cfg.seed = train_seed;
        cfg.validate();

        const auto cohort = load_series_csv(train_data);
        std::vector<PatientSeries> prepared;
        prepared.reserve(cohort.size());
        for (const auto& s : cohort) prepared.push_back(clip_and_scale(impute_fill(s)));
        const WindowSet windows = build_windows(prepared, cfg.target, cfg.covariates,
                                                cfg.history, cfg.horizon);
        const SplitDataset split = split_patients(windows, cfg.seed);

        TrainedModel trained = train_model(cfg, split);
        save_model(trained, train_out);
        std::cout << "trained " << model_label(cfg) << " for " << trained.val_loss.size()
                  << " epochs (best epoch " << trained.best_epoch + 1 << ", val mse "
                  << trained.val_loss[trained.best_epoch] << "); saved to " << train_out << "\n";
        return 0;
    }

    if (evaluate->parsed()) {
        TrainedModel m = load_model(eval_model);
        const auto cohort = load_series_csv(eval_data);
        std::vector<PatientSeries> prepared;
        prepared.reserve(cohort.size());
        for (const auto& s : cohort) prepared.push_back(clip_and_scale(impute_fill(s)));
        const WindowSet windows = build_windows(prepared, m.config.target, m.config.covariates,
                                                m.config.history, m.config.horizon);
        // The test portion is carved out with the seed stored in the model,
        // so evaluation never sees the patients the model trained on when the
        // data file is the training file.
        const SplitDataset split = split_patients(windows, m.config.seed);
        const MetricsReport report = evaluate_model(m, split.test);
        write_text_file(eval_report, report.to_csv());
        std::cout << report.to_csv();
        return 0;
    }

    if (explain->parsed()) {
        TrainedModel m = load_model(explain_model);
        const WindowSet windows = model_windows(m, explain_data);
        explain_window(m, window_at(windows, explain_window_idx), explain_dir);
        std::cout << "wrote forecast.csv, attention.csv, attention_mean.csv, attention.svg to "
                  << explain_dir << "\n";
        return 0;
    }

    if (forecast->parsed()) {
        TrainedModel m = load_model(fc_model);
        const WindowSet windows = model_windows(m, fc_data);
        const Window& w = window_at(windows, fc_window_idx);
        const std::vector<double> pred = forecast_window(*m.model, w);
        std::string csv = "step,forecast,actual\n";
        char buf[80];
        for (std::size_t h = 0; h < pred.size(); ++h) {
            std::snprintf(buf, sizeof(buf), "%zu,%.17g,%.17g\n", h, pred[h], w.target[h]);
            csv += buf;
        }
        write_text_file(fc_out, csv);
        std::cout << "wrote " << pred.size() << "-step forecast to " << fc_out << "\n";
        return 0;
    }

    if (benchmark->parsed()) {
        const Channel target = channel_from_name(bm_target);
        if (target == Channel::RR)
            throw ConfigError("benchmark targets are HR or MBP");
        const auto cohort = load_series_csv(bm_data);
        const MetricsReport report = run_benchmark(
            cohort, target, bm_seed, 72, 36,
            [](const std::string& msg) { std::cerr << msg << "\n"; });
        write_text_file(bm_report, report.to_csv());
        std::cout << report.to_csv();
        return 0;
    }

    if (gradcheck->parsed()) {
        const GradSuiteResult result = run_gradient_suite(gc_seed);
        for (const auto& item : result.items) {
            std::printf("%-18s worst %.3e  tol %.0e  %s\n", item.name.c_str(), item.worst,
                        item.tolerance, item.passed ? "ok" : "FAIL");
        }
        if (!result.passed) {
            std::cerr << "gradient check FAILED\n";
            return 1;
        }
        std::cout << "gradient check passed\n";
        return 0;
    }

    return 0;
}

} // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const vitalcast::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "unexpected error: " << e.what() << "\n";
        return 1;
    }
}
