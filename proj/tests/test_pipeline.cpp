#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "vitalcast/data.hpp"
#include "vitalcast/serialize.hpp"
#include "vitalcast/train.hpp"

using namespace vitalcast;

namespace {

// Cohort of identical patients holding every channel constant; HR sits at the
// midpoint of its range so the scaled target is exactly 0.5.
std::vector<PatientSeries> constant_cohort(std::size_t patients, std::size_t len) {
    std::vector<PatientSeries> out;
    for (std::size_t p = 0; p < patients; ++p) {
        PatientSeries s;
        s.patient_id = "c" + std::to_string(p);
        for (std::size_t t = 0; t < len; ++t) {
            s.timestamps.push_back(static_cast<std::int64_t>(5 * t));
            s.channels[0].push_back(150.0);
            s.channels[1].push_back(95.0);
            s.channels[2].push_back(50.0);
        }
        out.push_back(clip_and_scale(s));
    }
    return out;
}

TrainConfig tiny_config() {
    TrainConfig cfg;
    cfg.model_kind = ModelKind::NBeats;
    cfg.target = Channel::HR;
    cfg.history = 8;
    cfg.horizon = 4;
    cfg.stacks = 1;
    cfg.blocks_per_stack = 1;
    cfg.width = 8;
    cfg.lr = 0.01;
    cfg.max_epochs = 300;
    cfg.patience = 300;
    cfg.seed = 123;
    return cfg;
}

SplitDataset constant_split(const TrainConfig& cfg, std::size_t patients = 8) {
    auto cohort = constant_cohort(patients, cfg.history + cfg.horizon);
    return split_patients(build_windows(cohort, cfg.target, cfg.covariates, cfg.history,
                                        cfg.horizon),
                          cfg.seed);
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace

TEST_CASE("config files apply and unknown keys refuse") {
    const std::string path = "vc_test_cfg.txt";
    {
        std::ofstream out(path);
        out << "# comment line\n"
               "model = nhits\n"
               "attention = on\n"
               "target = MBP\n"
               "covariates = HR,RR\n"
               "\n"
               "lr = 0.005\n"
               "batch_size = 16\n"
               "max_epochs = 50\n"
               "patience = 5\n"
               "grad_clip = 2.5\n"
               "seed = 77\n"
               "history = 24\n"
               "horizon = 12\n"
               "stacks = 2\n"
               "blocks_per_stack = 2\n"
               "width = 32\n"
               "kernels = 4,1\n"
               "ratios = 6,1\n";
    }
    TrainConfig cfg;
    apply_config_file(cfg, path);
    std::remove(path.c_str());

    CHECK(cfg.model_kind == ModelKind::NHits);
    CHECK(cfg.attention);
    CHECK(cfg.target == Channel::MBP);
    REQUIRE(cfg.covariates.size() == 2);
    CHECK(cfg.covariates[0] == Channel::HR);
    CHECK(cfg.covariates[1] == Channel::RR);
    CHECK(cfg.lr == 0.005);
    CHECK(cfg.batch_size == 16);
    CHECK(cfg.patience == 5);
    CHECK(cfg.history == 24);
    CHECK(cfg.kernels == std::vector<std::size_t>{4, 1});
    CHECK(cfg.ratios == std::vector<std::size_t>{6, 1});
    cfg.validate();

    TrainConfig fresh;
    CHECK_THROWS_AS(apply_config_entry(fresh, "learning_rate", "0.1"), ConfigError);
    CHECK_THROWS_AS(apply_config_entry(fresh, "model", "lstm"), ConfigError);
    CHECK_THROWS_AS(apply_config_entry(fresh, "attention", "maybe"), ConfigError);
    CHECK_THROWS_AS(apply_config_entry(fresh, "target", "SpO2"), ConfigError);
}

TEST_CASE("config validation catches contradictions") {
    TrainConfig cfg = tiny_config();
    cfg.covariates = {Channel::HR}; // duplicates the target
    CHECK_THROWS_AS(cfg.validate(), ConfigError);

    cfg = tiny_config();
    cfg.batch_size = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);

    cfg = tiny_config();
    cfg.patience = cfg.max_epochs + 1;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);

    cfg = tiny_config();
    cfg.model_kind = ModelKind::NHits;
    cfg.kernels = {2};
    cfg.ratios = {2, 1}; // two ratios for a single stack
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("resolved architecture fills per-kind defaults") {
    TrainConfig cfg;
    cfg.model_kind = ModelKind::NHits;
    ModelArch arch = cfg.resolved_arch();
    CHECK(arch.stacks == 3);
    CHECK(arch.blocks_per_stack == 1);
    CHECK(arch.width == 128);
    CHECK(arch.kernels == std::vector<std::size_t>{8, 4, 1});
    CHECK(arch.ratios == std::vector<std::size_t>{12, 4, 1});

    cfg.width = 64;
    CHECK(cfg.resolved_arch().width == 64);
}

TEST_CASE("training fits a constant signal") {
    TrainConfig cfg = tiny_config();
    SplitDataset data = constant_split(cfg);
    TrainedModel trained = train_model(cfg, data);

    REQUIRE(!trained.val_loss.empty());
    REQUIRE(trained.best_epoch < trained.val_loss.size());
    const double best = trained.val_loss[trained.best_epoch];
    CHECK(best <= 1e-6);
    CHECK(best == *std::min_element(trained.val_loss.begin(), trained.val_loss.end()));

    // Restored parameters reproduce the best validation loss.
    EvalStats stats = evaluate_forecasts(
        [&](const Window& w) { return forecast_window(*trained.model, w); }, data.val);
    CHECK(stats.mse == doctest::Approx(best).epsilon(1e-9));
}

TEST_CASE("absurd learning rates fail loudly") {
    TrainConfig cfg = tiny_config();
    cfg.lr = 1e100;
    cfg.max_epochs = 5;
    cfg.patience = 5;
    SplitDataset data = constant_split(cfg);
    CHECK_THROWS_AS(train_model(cfg, data), TrainError);
}

TEST_CASE("zero patience stops after one epoch") {
    TrainConfig cfg = tiny_config();
    cfg.patience = 0;
    SplitDataset data = constant_split(cfg);
    TrainedModel trained = train_model(cfg, data);
    CHECK(trained.train_loss.size() == 1);
    CHECK(trained.val_loss.size() == 1);
}

TEST_CASE("empty splits refuse to train") {
    TrainConfig cfg = tiny_config();
    auto cohort = constant_cohort(2, cfg.history + cfg.horizon); // too few for a val split
    SplitDataset data = split_patients(
        build_windows(cohort, cfg.target, {}, cfg.history, cfg.horizon), cfg.seed);
    CHECK_THROWS_AS(train_model(cfg, data), TrainError);
}

TEST_CASE("training is deterministic end to end") {
    TrainConfig cfg = tiny_config();
    cfg.max_epochs = 40;
    cfg.patience = 40;
    SplitDataset data = constant_split(cfg);

    TrainedModel a = train_model(cfg, data);
    TrainedModel b = train_model(cfg, data);
    CHECK(a.train_loss == b.train_loss);
    CHECK(a.val_loss == b.val_loss);
    CHECK(a.best_epoch == b.best_epoch);

    save_model(a, "vc_test_det_a.bin");
    save_model(b, "vc_test_det_b.bin");
    CHECK(slurp("vc_test_det_a.bin") == slurp("vc_test_det_b.bin"));
    std::remove("vc_test_det_a.bin");
    std::remove("vc_test_det_b.bin");
}

TEST_CASE("model files round trip bit for bit") {
    TrainConfig cfg = tiny_config();
    cfg.model_kind = ModelKind::NHits;
    cfg.attention = true;
    cfg.covariates = {Channel::MBP};
    cfg.stacks = 2;
    cfg.kernels = {2, 1};
    cfg.ratios = {2, 1};
    cfg.max_epochs = 3;
    cfg.patience = 3;
    SplitDataset data = constant_split(cfg);
    TrainedModel trained = train_model(cfg, data);

    const std::string path = "vc_test_rt.bin";
    save_model(trained, path);
    TrainedModel back = load_model(path);

    CHECK(back.config.model_kind == cfg.model_kind);
    CHECK(back.config.attention == cfg.attention);
    CHECK(back.config.target == cfg.target);
    CHECK(back.config.covariates == cfg.covariates);
    CHECK(back.config.kernels == cfg.kernels);
    CHECK(back.config.ratios == cfg.ratios);
    CHECK(back.config.seed == cfg.seed);
    CHECK(back.best_epoch == trained.best_epoch);
    CHECK(back.train_loss == trained.train_loss);
    CHECK(back.val_loss == trained.val_loss);

    auto pa = trained.model->params(), pb = back.model->params();
    REQUIRE(pa.size() == pb.size());
    for (std::size_t i = 0; i < pa.size(); ++i) {
        CHECK(pa[i].name == pb[i].name);
        CHECK(pa[i].tensor->data == pb[i].tensor->data);
    }

    const Window& w = data.test.windows.empty() ? data.train.windows[0] : data.test.windows[0];
    CHECK(forecast_window(*trained.model, w) == forecast_window(*back.model, w));

    // Saving the loaded model reproduces the file byte for byte.
    save_model(back, "vc_test_rt2.bin");
    CHECK(slurp(path) == slurp("vc_test_rt2.bin"));
    std::remove("vc_test_rt2.bin");
    std::remove(path.c_str());
}

TEST_CASE("malformed model files raise io errors") {
    auto write_file = [](const std::string& path, const std::string& bytes) {
        std::ofstream out(path, std::ios::binary);
        out << bytes;
    };
    const std::string path = "vc_test_bad.bin";

    write_file(path, "");
    CHECK_THROWS_AS(load_model(path), IoError);

    write_file(path, "NOPE9\n!model nbeats\n");
    CHECK_THROWS_AS(load_model(path), IoError);

    // A genuine file, truncated: the reader names the offset it died at.
    TrainConfig cfg = tiny_config();
    cfg.max_epochs = 1;
    cfg.patience = 1;
    TrainedModel trained = train_model(cfg, constant_split(cfg));
    save_model(trained, path);
    std::string bytes = slurp(path);
    write_file(path, bytes.substr(0, bytes.size() / 2));
    try {
        load_model(path);
        FAIL_CHECK("expected IoError for truncated file");
    } catch (const IoError& e) {
        CHECK(std::string(e.what()).find("offset") != std::string::npos);
    }

    // Trailing junk after the trailer is rejected too.
    write_file(path, bytes + "junk");
    CHECK_THROWS_AS(load_model(path), IoError);
    std::remove(path.c_str());
    CHECK_THROWS_AS(load_model("vc_test_missing.bin"), IoError);
}

TEST_CASE("evaluation reports persistence first") {
    TrainConfig cfg = tiny_config();
    cfg.max_epochs = 2;
    cfg.patience = 2;
    SplitDataset data = constant_split(cfg);
    TrainedModel trained = train_model(cfg, data);

    MetricsReport report = evaluate_model(trained, data.test);
    REQUIRE(report.rows.size() == 2);
    CHECK(report.rows[0].model == "persistence");
    CHECK(report.rows[0].covariates == "-");
    CHECK(report.rows[1].model == "nbeats");
    CHECK(report.rows[1].covariates == "without");
    CHECK(report.rows[1].target == "HR");
    CHECK(report.rows[0].n_windows == data.test.windows.size());

    // Constant series: persistence is exact.
    CHECK(report.rows[0].mse == 0.0);
    CHECK(report.rows[0].dtw == 0.0);
}

TEST_CASE("a forecast function that returns the truth scores zero") {
    TrainConfig cfg = tiny_config();
    SplitDataset data = constant_split(cfg);
    EvalStats stats =
        evaluate_forecasts([](const Window& w) { return w.target; }, data.train);
    CHECK(stats.mse == 0.0);
    CHECK(stats.dtw == 0.0);
    CHECK(stats.n_windows == data.train.windows.size());
}

TEST_CASE("model labels name the configuration") {
    TrainConfig cfg;
    CHECK(model_label(cfg) == "nbeats");
    cfg.attention = true;
    CHECK(model_label(cfg) == "nbeats+attention");
    cfg.model_kind = ModelKind::NHits;
    CHECK(model_label(cfg) == "nhits+attention");
}

TEST_CASE("benchmark covariates are the other two channels") {
    CHECK(benchmark_covariates(Channel::HR) == std::vector<Channel>{Channel::MBP, Channel::RR});
    CHECK(benchmark_covariates(Channel::MBP) == std::vector<Channel>{Channel::HR, Channel::RR});
    CHECK(benchmark_covariates(Channel::RR) == std::vector<Channel>{Channel::HR, Channel::MBP});
}

TEST_CASE("channel projection keeps the target row and picks covariates") {
    auto cohort = constant_cohort(3, 12);
    // Make rows distinguishable.
    for (auto& s : cohort) {
        for (std::size_t t = 0; t < s.length(); ++t) {
            s.channels[1][t] = 0.25; // already scaled values
            s.channels[2][t] = 0.75;
        }
    }
    WindowSet full = build_windows(cohort, Channel::HR, {Channel::MBP, Channel::RR}, 8, 4);
    REQUIRE(full.windows.size() == 3);

    WindowSet bare = project_channels(full, {});
    CHECK(bare.covariates.empty());
    CHECK(bare.windows[0].input.size() == 8);
    CHECK(bare.windows[0].input[0] == 0.5);

    WindowSet rr = project_channels(full, {Channel::RR});
    REQUIRE(rr.covariates == std::vector<Channel>{Channel::RR});
    REQUIRE(rr.windows[0].input.size() == 16);
    CHECK(rr.windows[0].input[0] == 0.5);
    CHECK(rr.windows[0].input[8] == 0.75);
    CHECK(rr.windows[0].target == full.windows[0].target);
}

TEST_CASE("explain writes its four artifacts") {
    TrainConfig cfg = tiny_config();
    cfg.attention = true;
    cfg.covariates = {Channel::MBP};
    TrainedModel trained;
    trained.config = cfg;
    trained.model = build_model(cfg);

    auto cohort = constant_cohort(1, cfg.history + cfg.horizon);
    WindowSet ws = build_windows(cohort, cfg.target, cfg.covariates, cfg.history, cfg.horizon);
    REQUIRE(!ws.windows.empty());

    const std::string dir = "vc_test_explain";
    explain_window(trained, ws.windows[0], dir);

    const std::string forecast = slurp(dir + "/forecast.csv");
    CHECK(forecast.rfind("step,forecast,actual", 0) == 0);
    CHECK(std::count(forecast.begin(), forecast.end(), '\n') == 1 + 4);

    const std::string attention = slurp(dir + "/attention.csv");
    CHECK(attention.rfind("series,step,t0", 0) == 0);
    CHECK(!slurp(dir + "/attention_mean.csv").empty());

    const std::string svg = slurp(dir + "/attention.svg");
    CHECK(svg.find("<svg") != std::string::npos);
    CHECK(svg.find("HR") != std::string::npos);

    std::filesystem::remove_all(dir);
}

TEST_CASE("explain refuses models without the attention head") {
    TrainConfig cfg = tiny_config();
    TrainedModel trained;
    trained.config = cfg;
    trained.model = build_model(cfg);
    auto cohort = constant_cohort(1, cfg.history + cfg.horizon);
    WindowSet ws = build_windows(cohort, cfg.target, {}, cfg.history, cfg.horizon);
    CHECK_THROWS_AS(explain_window(trained, ws.windows[0], "vc_test_explain2"), UsageError);
    std::filesystem::remove_all("vc_test_explain2");
}
