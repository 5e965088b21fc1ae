#include "vitalcast/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "vitalcast/adam.hpp"
#include "vitalcast/error.hpp"
#include "vitalcast/heatmap.hpp"
#include "vitalcast/nbeats.hpp"
#include "vitalcast/nhits.hpp"
#include "vitalcast/rng.hpp"

namespace vitalcast {

namespace {

// Fixed stream indices so every consumer of the run seed draws from its own
// independent sequence.
constexpr std::uint64_t kInitStream = 1;
constexpr std::uint64_t kShuffleStream = 2;

std::vector<std::size_t> parse_size_list(const std::string& s) {
    std::vector<std::size_t> out;
    if (s == "-" || s.empty()) return out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            out.push_back(static_cast<std::size_t>(std::stoull(item)));
        } catch (const std::exception&) {
            throw ConfigError("invalid integer '" + item + "' in list '" + s + "'");
        }
    }
    return out;
}

std::vector<Channel> parse_channel_list(const std::string& s) {
    std::vector<Channel> out;
    if (s == "-" || s.empty()) return out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(channel_from_name(item));
    return out;
}

double parse_double_value(const std::string& key, const std::string& s) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("invalid numeric value '" + s + "' for key '" + key + "'");
    }
}

std::size_t parse_size_value(const std::string& key, const std::string& s) {
    try {
        std::size_t pos = 0;
        const unsigned long long v = std::stoull(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return static_cast<std::size_t>(v);
    } catch (const std::exception&) {
        throw ConfigError("invalid integer value '" + s + "' for key '" + key + "'");
    }
}

bool parse_on_off(const std::string& key, const std::string& s) {
    if (s == "on") return true;
    if (s == "off") return false;
    throw ConfigError("key '" + key + "' expects on or off, got '" + s + "'");
}

TensorPtr window_input_tensor(const Window& w, std::size_t channels, std::size_t history) {
    return tensor_of({channels, history}, w.input);
}

TensorPtr window_target_tensor(const Window& w, std::size_t horizon) {
    return tensor_of({1, horizon}, w.target);
}

} // namespace

ModelArch TrainConfig::resolved_arch() const {
    ModelArch a = default_arch(model_kind);
    if (stacks) a.stacks = stacks;
    if (blocks_per_stack) a.blocks_per_stack = blocks_per_stack;
    if (width) a.width = width;
    if (!kernels.empty()) a.kernels = kernels;
    if (!ratios.empty()) a.ratios = ratios;
    if (model_kind == ModelKind::NHits) {
        // A stack count override without explicit kernels/ratios keeps the
        // defaults only if the lengths still line up.
        if (a.kernels.size() != a.stacks || a.ratios.size() != a.stacks)
            throw ConfigError("nhits needs exactly one kernel and one ratio per stack (stacks=" +
                              std::to_string(a.stacks) + ", kernels=" +
                              std::to_string(a.kernels.size()) + ", ratios=" +
                              std::to_string(a.ratios.size()) + ")");
    }
    return a;
}

void TrainConfig::validate() const {
    if (history == 0 || horizon == 0) throw ConfigError("history and horizon must be positive");
    if (batch_size == 0) throw ConfigError("batch_size must be >= 1");
    if (max_epochs == 0) throw ConfigError("max_epochs must be >= 1");
    if (patience > max_epochs)
        throw ConfigError("patience (" + std::to_string(patience) + ") must not exceed max_epochs (" +
                          std::to_string(max_epochs) + ")");
    if (!(lr > 0.0)) throw ConfigError("learning rate must be positive");
    if (!(grad_clip > 0.0)) throw ConfigError("gradient clip norm must be positive");
    for (Channel c : covariates)
        if (c == target)
            throw ConfigError(std::string("covariates must not repeat the target channel ") +
                              channel_name(target));
    resolved_arch(); // throws on inconsistent architecture
}

void apply_config_entry(TrainConfig& cfg, const std::string& key, const std::string& value) {
    if (key == "model")
        cfg.model_kind = model_kind_from_name(value);
    else if (key == "attention")
        cfg.attention = parse_on_off(key, value);
    else if (key == "target")
        cfg.target = channel_from_name(value);
    else if (key == "covariates")
        cfg.covariates = parse_channel_list(value);
    else if (key == "lr")
        cfg.lr = parse_double_value(key, value);
    else if (key == "beta1")
        cfg.beta1 = parse_double_value(key, value);
    else if (key == "beta2")
        cfg.beta2 = parse_double_value(key, value);
    else if (key == "eps")
        cfg.eps = parse_double_value(key, value);
    else if (key == "batch_size")
        cfg.batch_size = parse_size_value(key, value);
    else if (key == "max_epochs")
        cfg.max_epochs = parse_size_value(key, value);
    else if (key == "patience")
        cfg.patience = parse_size_value(key, value);
    else if (key == "grad_clip")
        cfg.grad_clip = parse_double_value(key, value);
    else if (key == "seed")
        cfg.seed = parse_size_value(key, value);
    else if (key == "history")
        cfg.history = parse_size_value(key, value);
    else if (key == "horizon")
        cfg.horizon = parse_size_value(key, value);
    else if (key == "stacks")
        cfg.stacks = parse_size_value(key, value);
    else if (key == "blocks_per_stack")
        cfg.blocks_per_stack = parse_size_value(key, value);
    else if (key == "width")
        cfg.width = parse_size_value(key, value);
    else if (key == "kernels")
        cfg.kernels = parse_size_list(value);
    else if (key == "ratios")
        cfg.ratios = parse_size_list(value);
    else
        throw ConfigError("unknown config key '" + key + "'");
}

void apply_config_file(TrainConfig& cfg, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file '" + path + "'");
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::string trimmed = line;
        trimmed.erase(0, trimmed.find_first_not_of(" \t"));
        if (trimmed.empty() || trimmed[0] == '#') continue;
        const auto eq = trimmed.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(line_no) +
                              ": expected 'key = value', got '" + line + "'");
        auto strip = [](std::string s) {
            s.erase(0, s.find_first_not_of(" \t"));
            const auto end = s.find_last_not_of(" \t");
            s.erase(end == std::string::npos ? 0 : end + 1);
            return s;
        };
        const std::string key = strip(trimmed.substr(0, eq));
        const std::string value = strip(trimmed.substr(eq + 1));
        if (key.empty())
            throw ConfigError("config line " + std::to_string(line_no) + ": empty key");
        apply_config_entry(cfg, key, value);
    }
}

std::unique_ptr<Forecaster> build_model(const TrainConfig& cfg) {
    cfg.validate();
    Rng rng(Rng::derive(cfg.seed, kInitStream));
    const ModelArch arch = cfg.resolved_arch();
    std::unique_ptr<Forecaster> base;
    if (cfg.model_kind == ModelKind::NBeats)
        base = std::make_unique<NBeatsForecaster>(cfg.num_channels(), cfg.history, cfg.horizon,
                                                  arch, rng);
    else
        base = std::make_unique<NHitsForecaster>(cfg.num_channels(), cfg.history, cfg.horizon,
                                                 arch, rng);
    if (cfg.attention) return std::make_unique<AttentionForecaster>(std::move(base), rng);
    return base;
}

TrainedModel train_model(const TrainConfig& cfg, const SplitDataset& data) {
    cfg.validate();
    if (data.train.windows.empty()) throw TrainError("training split is empty");
    if (data.val.windows.empty()) throw TrainError("validation split is empty");
    const std::size_t n_ch = cfg.num_channels();
    for (const WindowSet* set : {&data.train, &data.val}) {
        if (set->history != cfg.history || set->horizon != cfg.horizon ||
            set->num_channels() != n_ch)
            throw ShapeError("window set (" + std::to_string(set->num_channels()) + " channels, " +
                             std::to_string(set->history) + "->" + std::to_string(set->horizon) +
                             ") does not match config (" + std::to_string(n_ch) + " channels, " +
                             std::to_string(cfg.history) + "->" + std::to_string(cfg.horizon) +
                             ")");
    }

    TrainedModel out;
    out.config = cfg;
    out.model = build_model(cfg);
    Forecaster& model = *out.model;

    std::vector<NamedParam> named = model.params();
    std::vector<TensorPtr> params;
    params.reserve(named.size());
    for (auto& p : named) params.push_back(p.tensor);
    AdamOptimizer adam(params, {cfg.lr, cfg.beta1, cfg.beta2, cfg.eps});

    const std::size_t n_train = data.train.windows.size();
    std::vector<TensorPtr> train_x, train_y, val_x;
    train_x.reserve(n_train);
    train_y.reserve(n_train);
    for (const auto& w : data.train.windows) {
        train_x.push_back(window_input_tensor(w, n_ch, cfg.history));
        train_y.push_back(window_target_tensor(w, cfg.horizon));
    }
    val_x.reserve(data.val.windows.size());
    for (const auto& w : data.val.windows) val_x.push_back(window_input_tensor(w, n_ch, cfg.history));

    Rng shuffle_rng(Rng::derive(cfg.seed, kShuffleStream));
    std::vector<std::size_t> order(n_train);
    for (std::size_t i = 0; i < n_train; ++i) order[i] = i;

    double best_val = std::numeric_limits<double>::infinity();
    std::vector<std::vector<double>> best_params;

    for (std::size_t epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        shuffle(order, shuffle_rng);
        double epoch_loss = 0.0;
        for (std::size_t begin = 0; begin < n_train; begin += cfg.batch_size) {
            const std::size_t end = std::min(begin + cfg.batch_size, n_train);
            const double inv_batch = 1.0 / static_cast<double>(end - begin);
            for (std::size_t i = begin; i < end; ++i) {
                const std::size_t idx = order[i];
                Tape tape;
                const ForecastResult fr = model.forward(tape, train_x[idx]);
                const TensorPtr loss = tape.mse_loss(fr.forecast, train_y[idx]);
                const double lval = loss->data[0];
                if (!std::isfinite(lval))
                    throw TrainError("training loss became non-finite at epoch " +
                                     std::to_string(epoch + 1));
                epoch_loss += lval;
                tape.backward(tape.scale(loss, inv_batch));
            }
            clip_gradient_norm(params, cfg.grad_clip);
            adam.step();
        }
        out.train_loss.push_back(epoch_loss / static_cast<double>(n_train));

        double val_loss = 0.0;
        for (std::size_t i = 0; i < val_x.size(); ++i) {
            Tape tape(false);
            const ForecastResult fr = model.forward(tape, val_x[i]);
            val_loss += mse_horizon(fr.forecast->data, data.val.windows[i].target);
        }
        val_loss /= static_cast<double>(val_x.size());
        if (!std::isfinite(val_loss))
            throw TrainError("validation loss became non-finite at epoch " +
                             std::to_string(epoch + 1));
        out.val_loss.push_back(val_loss);

        if (val_loss < best_val) {
            best_val = val_loss;
            out.best_epoch = epoch;
            best_params.clear();
            best_params.reserve(params.size());
            for (const auto& p : params) best_params.push_back(p->data);
        }
        if (epoch - out.best_epoch >= cfg.patience) break;
    }

    for (std::size_t i = 0; i < params.size(); ++i) params[i]->data = best_params[i];
    for (const auto& p : params) p->clear_grad();
    return out;
}

EvalStats evaluate_forecasts(const std::function<std::vector<double>(const Window&)>& forecast_fn,
                             const WindowSet& windows) {
    if (windows.windows.empty()) throw UsageError("cannot evaluate an empty window set");
    EvalStats stats;
    for (const auto& w : windows.windows) {
        const std::vector<double> pred = forecast_fn(w);
        stats.mse += mse_horizon(pred, w.target);
        stats.dtw += dtw_distance(pred, w.target);
    }
    const double n = static_cast<double>(windows.windows.size());
    stats.mse /= n;
    stats.dtw /= n;
    stats.n_windows = windows.windows.size();
    return stats;
}

std::string model_label(const TrainConfig& cfg) {
    std::string label = model_kind_name(cfg.model_kind);
    if (cfg.attention) label += "+attention";
    return label;
}

std::vector<double> forecast_window(Forecaster& model, const Window& window) {
    Tape tape(false);
    const TensorPtr x = tensor_of({model.channels(), model.history()}, window.input);
    const ForecastResult fr = model.forward(tape, x);
    return fr.forecast->data;
}

namespace {

EvalStats persistence_stats(const WindowSet& windows) {
    const std::size_t n_ch = windows.num_channels();
    const std::size_t history = windows.history;
    const std::size_t horizon = windows.horizon;
    return evaluate_forecasts(
        [&](const Window& w) {
            return persistence_forecast(w.input, n_ch, history, 0, horizon);
        },
        windows);
}

MetricsRow stats_row(std::string model, std::string covariates, Channel target,
                     const EvalStats& s) {
    MetricsRow row;
    row.model = std::move(model);
    row.covariates = std::move(covariates);
    row.target = channel_name(target);
    row.mse = s.mse;
    row.dtw = s.dtw;
    row.n_windows = s.n_windows;
    return row;
}

} // namespace

MetricsReport evaluate_model(TrainedModel& trained, const WindowSet& windows) {
    const TrainConfig& cfg = trained.config;
    if (windows.history != cfg.history || windows.horizon != cfg.horizon ||
        windows.num_channels() != cfg.num_channels())
        throw ShapeError("window set does not match the model's channels/history/horizon");

    MetricsReport report;
    report.rows.push_back(stats_row("persistence", "-", cfg.target, persistence_stats(windows)));
    const EvalStats model_stats = evaluate_forecasts(
        [&](const Window& w) { return forecast_window(*trained.model, w); }, windows);
    report.rows.push_back(stats_row(model_label(cfg),
                                    cfg.covariates.empty() ? "without" : "with", cfg.target,
                                    model_stats));
    return report;
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << content;
    if (!out) throw IoError("failed while writing '" + path + "'");
}

void explain_window(TrainedModel& trained, const Window& window, const std::string& out_dir) {
    auto* attn = dynamic_cast<AttentionForecaster*>(trained.model.get());
    if (!attn)
        throw UsageError("explain requires a model trained with the attention head enabled");

    std::filesystem::create_directories(out_dir);
    const std::size_t n_ch = attn->channels();
    const std::size_t history = attn->history();
    const std::size_t horizon = attn->horizon();

    Tape tape(false);
    const TensorPtr x = tensor_of({n_ch, history}, window.input);
    AttentionArtifacts art;
    const ForecastResult fr = attn->forward_with_artifacts(tape, x, art);

    char buf[64];
    auto fmt = [&](double v) {
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        return std::string(buf);
    };

    std::vector<std::string> series_names;
    series_names.push_back(channel_name(trained.config.target));
    for (Channel c : trained.config.covariates) series_names.push_back(channel_name(c));

    std::string forecast_csv = "step,forecast,actual\n";
    for (std::size_t h = 0; h < horizon; ++h)
        forecast_csv += std::to_string(h) + "," + fmt(fr.forecast->data[h]) + "," +
                        fmt(window.target[h]) + "\n";
    write_text_file(out_dir + "/forecast.csv", forecast_csv);

    std::string attention_csv = "series,step";
    for (std::size_t l = 0; l < history; ++l) attention_csv += ",t" + std::to_string(l);
    attention_csv += "\n";
    for (std::size_t i = 0; i < n_ch; ++i)
        for (std::size_t h = 0; h < horizon; ++h) {
            attention_csv += series_names[i] + "," + std::to_string(h);
            for (std::size_t l = 0; l < history; ++l)
                attention_csv += "," + fmt(art.map_at(i, h, l));
            attention_csv += "\n";
        }
    write_text_file(out_dir + "/attention.csv", attention_csv);

    std::string mean_csv = "series";
    for (std::size_t l = 0; l < history; ++l) mean_csv += ",t" + std::to_string(l);
    mean_csv += "\n";
    for (std::size_t i = 0; i < n_ch; ++i) {
        mean_csv += series_names[i];
        for (std::size_t l = 0; l < history; ++l) {
            double acc = 0.0;
            for (std::size_t h = 0; h < horizon; ++h) acc += art.map_at(i, h, l);
            mean_csv += "," + fmt(acc / static_cast<double>(horizon));
        }
        mean_csv += "\n";
    }
    write_text_file(out_dir + "/attention_mean.csv", mean_csv);

    write_text_file(out_dir + "/attention.svg", attention_svg(art, series_names));
}

std::vector<Channel> benchmark_covariates(Channel target) {
    std::vector<Channel> covs;
    for (std::size_t c = 0; c < kNumChannels; ++c)
        if (static_cast<Channel>(c) != target) covs.push_back(static_cast<Channel>(c));
    return covs;
}

WindowSet project_channels(const WindowSet& full, const std::vector<Channel>& covariates) {
    std::vector<std::size_t> rows;
    rows.push_back(0);
    for (Channel c : covariates) {
        const auto it = std::find(full.covariates.begin(), full.covariates.end(), c);
        if (it == full.covariates.end())
            throw ConfigError(std::string("channel ") + channel_name(c) +
                              " is not part of the source window set");
        rows.push_back(1 + static_cast<std::size_t>(it - full.covariates.begin()));
    }

    WindowSet out;
    out.target = full.target;
    out.covariates = covariates;
    out.history = full.history;
    out.horizon = full.horizon;
    out.windows.reserve(full.windows.size());
    for (const auto& w : full.windows) {
        Window pw;
        pw.patient_id = w.patient_id;
        pw.start = w.start;
        pw.target = w.target;
        pw.input.reserve(rows.size() * full.history);
        for (std::size_t r : rows)
            pw.input.insert(pw.input.end(), w.input.begin() + r * full.history,
                            w.input.begin() + (r + 1) * full.history);
        out.windows.push_back(std::move(pw));
    }
    return out;
}

MetricsReport run_benchmark(const std::vector<PatientSeries>& cohort, Channel target,
                            std::uint64_t seed, std::size_t history, std::size_t horizon,
                            const std::function<void(const std::string&)>& progress) {
    std::vector<PatientSeries> prepared;
    prepared.reserve(cohort.size());
    for (const auto& s : cohort) prepared.push_back(clip_and_scale(impute_fill(s)));

    const std::vector<Channel> full_covs = benchmark_covariates(target);
    const WindowSet full = build_windows(prepared, target, full_covs, history, horizon);
    // One split for the whole grid: every configuration sees the same test
    // patients, so rows are comparable and the persistence row is shared.
    const SplitDataset split = split_patients(full, seed);

    MetricsReport report;
    report.rows.push_back(
        stats_row("persistence", "-", target, persistence_stats(split.test)));

    std::size_t config_index = 0;
    for (ModelKind kind : {ModelKind::NBeats, ModelKind::NHits}) {
        for (bool attention : {false, true}) {
            for (bool with_covs : {false, true}) {
                TrainConfig cfg;
                cfg.model_kind = kind;
                cfg.attention = attention;
                cfg.target = target;
                cfg.covariates = with_covs ? full_covs : std::vector<Channel>{};
                cfg.history = history;
                cfg.horizon = horizon;
                cfg.seed = Rng::derive(seed, 100 + config_index);

                SplitDataset view;
                view.train = project_channels(split.train, cfg.covariates);
                view.val = project_channels(split.val, cfg.covariates);
                view.test = project_channels(split.test, cfg.covariates);

                if (progress)
                    progress("training " + model_label(cfg) + " (" +
                             (with_covs ? "with" : "without") + " covariates)");
                TrainedModel trained = train_model(cfg, view);
                const EvalStats stats = evaluate_forecasts(
                    [&](const Window& w) { return forecast_window(*trained.model, w); },
                    view.test);
                report.rows.push_back(stats_row(model_label(cfg),
                                                with_covs ? "with" : "without", target, stats));
                ++config_index;
            }
        }
    }
    return report;
}

} // namespace vitalcast
