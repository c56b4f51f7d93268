#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <string>

#include "cqural/experiment.hpp"
#include "cqural/metrics.hpp"
#include "cqural/report.hpp"

using namespace cqural;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& path) {
    const auto bytes = read_binary_file(path.string());
    return std::string(bytes.begin(), bytes.end());
}

fs::path fresh_dir(const char* name) {
    const fs::path dir = fs::temp_directory_path() / name;
    fs::remove_all(dir);
    return dir;
}

}  // namespace

TEST_CASE("run_experiment: contract files exist and parse for a synthetic run") {
    const fs::path out = fresh_dir("cq_exp_files");
    ExperimentConfig cfg = parse_experiment_config(R"({
        "dataset": "synthetic", "model": "cqural", "epochs": 4,
        "samples_per_class": 10, "injection_epoch": 3, "seeds": [5],
        "synthetic": {"height": 10, "width": 10}
    })");
    cfg.out_dir = out.string();
    run_experiment(cfg, RunMode::continual);

    const fs::path seed_dir = out / "seed_5";
    for (const char* name : {"metrics.csv", "loss_curve.csv", "timeline.csv", "predictions.csv"}) {
        INFO(name);
        REQUIRE(fs::exists(seed_dir / name));
        const auto rows = parse_csv(slurp(seed_dir / name));
        CHECK(rows.size() >= 1);
        for (const auto& row : rows) CHECK(row.size() == rows[0].size());
    }
    REQUIRE(fs::exists(seed_dir / "config_echo.json"));
    const ExperimentConfig echoed = parse_experiment_config(slurp(seed_dir / "config_echo.json"));
    CHECK(echoed.epochs == 4);
    CHECK(echoed.model == "cqural");
    REQUIRE(fs::exists(seed_dir / "loss_curve.svg"));
    CHECK(xml_well_formed(slurp(seed_dir / "loss_curve.svg")));
    fs::remove_all(out);
}

TEST_CASE("run_experiment: checkpoint rows land at epochs 5..25 for a 25-epoch run") {
    const fs::path out = fresh_dir("cq_exp_rows");
    ExperimentConfig cfg = parse_experiment_config(R"({
        "dataset": "synthetic", "model": "qnn", "epochs": 25,
        "samples_per_class": 10, "seeds": [2], "injection_epoch": 25,
        "synthetic": {"height": 8, "width": 8}
    })");
    cfg.out_dir = out.string();
    run_experiment(cfg, RunMode::train);

    const auto rows = parse_csv(slurp(out / "seed_2" / "metrics.csv"));
    std::vector<std::string> checkpoint_epochs;
    for (size_t r = 1; r < rows.size(); ++r) {
        if (rows[r][0] == "checkpoint") checkpoint_epochs.push_back(rows[r][1]);
    }
    CHECK(checkpoint_epochs == std::vector<std::string>{"5", "10", "15", "20", "25"});
    fs::remove_all(out);
}

TEST_CASE("run_experiment: every metrics number is recomputable from predictions.csv") {
    const fs::path out = fresh_dir("cq_exp_audit");
    ExperimentConfig cfg = parse_experiment_config(R"({
        "dataset": "synthetic", "model": "cnn", "epochs": 6,
        "samples_per_class": 12, "injection_epoch": 5, "seeds": [9],
        "synthetic": {"height": 10, "width": 10}
    })");
    cfg.out_dir = out.string();
    run_experiment(cfg, RunMode::continual);

    const auto preds = parse_csv(slurp(out / "seed_9" / "predictions.csv"));
    const auto metrics = parse_csv(slurp(out / "seed_9" / "metrics.csv"));
    REQUIRE(preds.size() > 1);
    REQUIRE(metrics.size() > 1);

    int audited = 0;
    for (size_t r = 1; r < metrics.size(); ++r) {
        const auto& row = metrics[r];
        const std::string& epoch = row[1];
        std::vector<int> predicted, truths;
        std::vector<double> scores;
        for (size_t p = 1; p < preds.size(); ++p) {
            if (preds[p][0] != epoch) continue;
            truths.push_back(std::stoi(preds[p][2]));
            predicted.push_back(std::stoi(preds[p][3]));
            scores.push_back(std::stod(preds[p][4]));
        }
        if (truths.empty()) continue;  // summary rows share the final epoch block
        const MetricsRow recomputed = compute_metrics(predicted, truths);
        const RocCurve roc = roc_points(scores, truths);
        CHECK(std::abs(std::stod(row[3]) - recomputed.accuracy * 100.0) < 1e-3);
        CHECK(std::abs(std::stod(row[4]) - recomputed.precision0) < 1e-3);
        CHECK(std::abs(std::stod(row[5]) - recomputed.recall0) < 1e-3);
        CHECK(std::abs(std::stod(row[6]) - recomputed.precision1) < 1e-3);
        CHECK(std::abs(std::stod(row[7]) - recomputed.recall1) < 1e-3);
        CHECK(std::stol(row[8]) == recomputed.confusion[0][0]);
        CHECK(std::stol(row[9]) == recomputed.confusion[0][1]);
        CHECK(std::stol(row[10]) == recomputed.confusion[1][0]);
        CHECK(std::stol(row[11]) == recomputed.confusion[1][1]);
        CHECK(std::abs(std::stod(row[12]) - roc.auc) < 1e-3);
        const long total = recomputed.total();
        CHECK(total == static_cast<long>(truths.size()));
        ++audited;
    }
    CHECK(audited >= 2);
    fs::remove_all(out);
}

TEST_CASE("run_experiment: fit-once baselines emit the same file contract") {
    const fs::path out = fresh_dir("cq_exp_svm");
    ExperimentConfig cfg = parse_experiment_config(R"({
        "dataset": "synthetic", "model": "svm", "epochs": 4,
        "samples_per_class": 10, "injection_epoch": 3, "seeds": [4],
        "synthetic": {"height": 8, "width": 8}
    })");
    cfg.out_dir = out.string();
    run_experiment(cfg, RunMode::train);
    for (const char* name : {"metrics.csv", "loss_curve.csv", "timeline.csv", "predictions.csv",
                             "config_echo.json", "loss_curve.svg"}) {
        CHECK(fs::exists(out / "seed_4" / name));
    }
    const auto metrics = parse_csv(slurp(out / "seed_4" / "metrics.csv"));
    REQUIRE(metrics.size() == 2);
    CHECK(metrics[1][0] == "summary");
    fs::remove_all(out);
}

TEST_CASE("run_experiment: explain mode writes one overlay per test image") {
    const fs::path out = fresh_dir("cq_exp_explain");
    ExperimentConfig cfg = parse_experiment_config(R"({
        "dataset": "synthetic", "model": "cnn", "epochs": 2,
        "samples_per_class": 10, "injection_epoch": 2, "seeds": [3],
        "synthetic": {"height": 10, "width": 10}
    })");
    cfg.out_dir = out.string();
    run_experiment(cfg, RunMode::explain);
    int count = 0;
    for (const auto& entry : fs::directory_iterator(out / "seed_3")) {
        if (entry.path().extension() == ".ppm") ++count;
    }
    CHECK(count == 4);  // 10 per class, 80:20 split -> 4 test images
    fs::remove_all(out);
}

TEST_CASE("run_experiment: cross-class injection is rejected on two-class synthetic data") {
    ExperimentConfig cfg = parse_experiment_config(R"({
        "dataset": "synthetic", "injection_source": "cross", "epochs": 2,
        "samples_per_class": 6, "injection_epoch": 2, "seeds": [1]
    })");
    cfg.out_dir = (fs::temp_directory_path() / "cq_exp_cross").string();
    CHECK_THROWS_AS(run_experiment(cfg, RunMode::continual), ConfigError);
    fs::remove_all(cfg.out_dir);
}
