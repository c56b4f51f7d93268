#include "cqural/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <memory>

#include "cqural/explain.hpp"
#include "cqural/metrics.hpp"
#include "cqural/report.hpp"
#include "cqural/trainer.hpp"

namespace cqural {

namespace {

namespace fs = std::filesystem;

std::string fmt_f(double v, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
    return buf;
}

std::vector<int> checkpoint_epochs(int epochs, int stride) {
    std::vector<int> out;
    for (int e = stride; e <= epochs; e += stride) out.push_back(e);
    if (out.empty() || out.back() != epochs) out.push_back(epochs);
    return out;
}

CquralConfig model_config(const ExperimentConfig& cfg, const TaskDataset& task, std::uint32_t seed) {
    CquralConfig mc;
    const LabeledImage& probe = task.train.at(0);
    mc.in_channels = probe.channels;
    mc.in_height = probe.height;
    mc.in_width = probe.width;
    mc.conv1_channels = cfg.conv1_channels;
    mc.conv2_channels = cfg.conv2_channels;
    mc.kernel_size = cfg.kernel_size;
    mc.fc4_width = cfg.fc4_width;
    mc.dropout_p = cfg.dropout_p;
    mc.head_mode = cfg.head_mode_enum();
    mc.shots = cfg.shots;
    mc.seed = seed;
    return mc;
}

std::pair<int, int> cross_pool_classes(const ExperimentConfig& cfg) {
    std::vector<int> picks;
    for (int c = 0; c <= 9 && static_cast<int>(picks.size()) < 2; ++c) {
        if (c != cfg.class_a && c != cfg.class_b) picks.push_back(c);
    }
    return {picks.at(0), picks.at(1)};
}

struct EpochRunOutputs {
    ContinualResult result;
    ForgettingStats forgetting;
};

EpochRunOutputs run_epoch_model(TrainableModel& model, const ExperimentConfig& cfg,
                                const TaskDataset& task, std::uint32_t seed, bool injection_enabled,
                                bool allow_replay = true) {
    TrainConfig tc = cfg.train_config(seed);
    if (!injection_enabled) tc.injection_ratio = 0.0;
    if (!allow_replay) tc.replay.enabled = false;
    EpochRunOutputs out;
    out.result = run_continual(model, tc, task);
    out.forgetting = cfg.epochs >= 2 ? compute_forgetting_stats(out.result.timeline) : ForgettingStats{};
    return out;
}

void write_loss_curve_csv(const fs::path& dir, const std::vector<EpochRecord>& records) {
    std::vector<std::vector<std::string>> rows;
    for (const auto& r : records) {
        rows.push_back({std::to_string(r.epoch), fmt_f(r.train_loss, 6), fmt_f(r.train_accuracy, 6),
                        fmt_f(r.test_accuracy, 6)});
    }
    write_text_file_atomic((dir / "loss_curve.csv").string(),
                           emit_csv({"epoch", "train_loss", "train_accuracy", "test_accuracy"}, rows));
}

void write_timeline_csv(const fs::path& dir, const TaskDataset& task, const CorrectnessTimeline& tl) {
    std::vector<std::vector<std::string>> rows;
    for (size_t i = 0; i < tl.examples.size(); ++i) {
        for (const auto& point : tl.examples[i]) {
            rows.push_back({std::to_string(i), std::to_string(task.train[i].source_index),
                            std::to_string(tl.labels[i]), std::to_string(point.epoch),
                            std::to_string(point.predicted), point.correct ? "1" : "0"});
        }
    }
    write_text_file_atomic(
        (dir / "timeline.csv").string(),
        emit_csv({"example", "source_index", "label", "epoch", "predicted", "correct"}, rows));
}

void write_predictions_csv(const fs::path& dir, const TaskDataset& task,
                           const std::vector<EpochRecord>& records, const std::vector<int>& epochs) {
    std::vector<std::vector<std::string>> rows;
    for (int e : epochs) {
        const EpochRecord& r = records.at(static_cast<size_t>(e) - 1);
        for (size_t i = 0; i < task.test.size(); ++i) {
            rows.push_back({std::to_string(e), std::to_string(i), std::to_string(task.test[i].label),
                            std::to_string(r.test_predicted[i]), fmt_f(r.test_score1[i], 6)});
        }
    }
    write_text_file_atomic((dir / "predictions.csv").string(),
                           emit_csv({"epoch", "example", "truth", "predicted", "score1"}, rows));
}

const std::vector<std::string> kMetricsHeader{
    "row",  "epoch",       "loss",       "accuracy_pct", "precision_0", "recall_0",
    "precision_1", "recall_1", "cm_00",   "cm_01",        "cm_10",       "cm_11",
    "auc",  "spike_delta", "forgetting_events_mean", "unforgettable_count", "dispersion_mean"};

std::vector<std::string> metrics_row(const std::string& kind, int epoch, double loss,
                                     const MetricsRow& m, double auc) {
    return {kind,
            std::to_string(epoch),
            fmt_f(loss, 6),
            fmt_f(m.accuracy * 100.0, 4),
            fmt_f(m.precision0, 4),
            fmt_f(m.recall0, 4),
            fmt_f(m.precision1, 4),
            fmt_f(m.recall1, 4),
            std::to_string(m.confusion[0][0]),
            std::to_string(m.confusion[0][1]),
            std::to_string(m.confusion[1][0]),
            std::to_string(m.confusion[1][1]),
            fmt_f(auc, 6),
            "", "", "", ""};
}

void write_metrics_csv(const fs::path& dir, const TaskDataset& task,
                       const std::vector<EpochRecord>& records, const std::vector<int>& epochs,
                       const ContinualResult& result, const ForgettingStats& forgetting) {
    std::vector<int> truths;
    truths.reserve(task.test.size());
    for (const auto& img : task.test) truths.push_back(img.label);

    std::vector<std::vector<std::string>> rows;
    for (int e : epochs) {
        const EpochRecord& r = records.at(static_cast<size_t>(e) - 1);
        const MetricsRow m = compute_metrics(r.test_predicted, truths);
        const RocCurve roc = roc_points(r.test_score1, truths);
        rows.push_back(metrics_row("checkpoint", e, r.train_loss, m, roc.auc));
    }
    const EpochRecord& last = records.back();
    const MetricsRow m = compute_metrics(last.test_predicted, truths);
    const RocCurve roc = roc_points(last.test_score1, truths);
    auto summary = metrics_row("summary", last.epoch, last.train_loss, m, roc.auc);
    summary[13] = result.spike_defined ? fmt_f(result.spike_delta, 6) : "";
    summary[14] = fmt_f(forgetting.mean_events, 6);
    summary[15] = std::to_string(forgetting.unforgettable_count);
    summary[16] = fmt_f(forgetting.mean_dispersion, 6);
    rows.push_back(std::move(summary));
    write_text_file_atomic((dir / "metrics.csv").string(), emit_csv(kMetricsHeader, rows));
}

void write_loss_svg(const fs::path& dir, const std::vector<PlotSeries>& series, const std::string& title) {
    write_text_file_atomic((dir / "loss_curve.svg").string(), emit_svg_plot(series, 640, 400, title));
}

PlotSeries loss_series(const std::string& name, const std::vector<EpochRecord>& records) {
    PlotSeries s;
    s.name = name;
    for (const auto& r : records) {
        s.x.push_back(static_cast<double>(r.epoch));
        s.y.push_back(r.train_loss);
    }
    return s;
}

void write_saliency_ppms(const fs::path& dir, ConvFeatureModel& model, const TaskDataset& task,
                         double alpha) {
    int index = 0;
    for (const auto& img : task.test) {
        const Prediction p = model.predict(img);
        const GradcamResult cam = gradcam(model, img, p.label);
        char name[32];
        std::snprintf(name, sizeof(name), "saliency_%04d.ppm", index++);
        write_binary_file_atomic((dir / name).string(), emit_ppm_overlay(img, cam.map.upsampled, alpha));
    }
}

// Fit-once baselines report one metrics block under epoch 0.
struct FitOnceOutputs {
    std::vector<int> test_predicted;
    std::vector<double> test_score1;
    double train_accuracy = 0.0;
    double loss = 0.0;  // final hinge for svm, solve residual for hybrid_svm
};

FitOnceOutputs evaluate_fit_once(const BinaryClassifier& model, const TaskDataset& task, double loss) {
    FitOnceOutputs out;
    out.loss = loss;
    int hits = 0;
    for (const auto& img : task.train) {
        if (model.predict(img).label == img.label) ++hits;
    }
    out.train_accuracy = static_cast<double>(hits) / static_cast<double>(task.train.size());
    for (const auto& img : task.test) {
        const Prediction p = model.predict(img);
        out.test_predicted.push_back(p.label);
        out.test_score1.push_back(p.score1);
    }
    return out;
}

void write_fit_once_outputs(const fs::path& dir, const TaskDataset& task, const FitOnceOutputs& out,
                            const std::vector<double>& loss_trace) {
    std::vector<std::vector<std::string>> curve_rows;
    for (size_t e = 0; e < loss_trace.size(); ++e) {
        curve_rows.push_back({std::to_string(e + 1), fmt_f(loss_trace[e], 6), "", ""});
    }
    write_text_file_atomic(
        (dir / "loss_curve.csv").string(),
        emit_csv({"epoch", "train_loss", "train_accuracy", "test_accuracy"}, curve_rows));
    write_text_file_atomic(
        (dir / "timeline.csv").string(),
        emit_csv({"example", "source_index", "label", "epoch", "predicted", "correct"}, {}));

    std::vector<std::vector<std::string>> pred_rows;
    for (size_t i = 0; i < task.test.size(); ++i) {
        pred_rows.push_back({"0", std::to_string(i), std::to_string(task.test[i].label),
                             std::to_string(out.test_predicted[i]), fmt_f(out.test_score1[i], 6)});
    }
    write_text_file_atomic((dir / "predictions.csv").string(),
                           emit_csv({"epoch", "example", "truth", "predicted", "score1"}, pred_rows));

    std::vector<int> truths;
    for (const auto& img : task.test) truths.push_back(img.label);
    const MetricsRow m = compute_metrics(out.test_predicted, truths);
    const RocCurve roc = roc_points(out.test_score1, truths);
    write_text_file_atomic((dir / "metrics.csv").string(),
                           emit_csv(kMetricsHeader, {metrics_row("summary", 0, out.loss, m, roc.auc)}));

    if (!loss_trace.empty()) {
        PlotSeries s;
        s.name = "train_hinge";
        for (size_t e = 0; e < loss_trace.size(); ++e) {
            s.x.push_back(static_cast<double>(e + 1));
            s.y.push_back(loss_trace[e]);
        }
        write_loss_svg(dir, {s}, "training loss");
    } else {
        PlotSeries s;
        s.name = "solve_residual";
        s.x.push_back(1.0);
        s.y.push_back(out.loss);
        write_loss_svg(dir, {s}, "solver residual");
    }
}

struct CompareRow {
    std::string model;
    double train_accuracy = 0.0;
    MetricsRow metrics;
    double auc = 0.0;
    double spike = 0.0;
    bool spike_defined = false;
};

std::vector<std::string> compare_row_fields(const CompareRow& row) {
    return {row.model,
            fmt_f(row.train_accuracy * 100.0, 4),
            fmt_f(row.metrics.accuracy * 100.0, 4),
            fmt_f(row.metrics.precision0, 4),
            fmt_f(row.metrics.recall0, 4),
            fmt_f(row.metrics.precision1, 4),
            fmt_f(row.metrics.recall1, 4),
            fmt_f(row.auc, 6),
            row.spike_defined ? fmt_f(row.spike, 6) : ""};
}

}  // namespace

TaskDataset prepare_task(const ExperimentConfig& config, std::uint32_t seed) {
    if (config.dataset == "synthetic") {
        if (config.injection_source == "cross") {
            throw ConfigError("cross-class injection needs a multi-class dataset");
        }
        SyntheticSpec spec;
        spec.height = config.synthetic_height;
        spec.width = config.synthetic_width;
        spec.margin = config.synthetic_margin;
        spec.per_class = config.samples_per_class;
        spec.injection_fraction = config.injection_fraction;
        spec.seed = seed;
        TaskDataset task = synthetic_task(spec);
        standardize(task);
        return task;
    }

    std::vector<LabeledImage> full;
    if (config.dataset == "mnist") {
        full = parse_mnist_idx(read_binary_file(config.mnist_images),
                               read_binary_file(config.mnist_labels));
    } else {
        for (const std::string& path : config.cifar_batches) {
            auto batch = parse_cifar10_bin(read_binary_file(path));
            const long base = static_cast<long>(full.size());
            for (auto& img : batch) {
                img.source_index += base;
                full.push_back(std::move(img));
            }
        }
    }

    DatasetSpec spec;
    spec.dataset = config.dataset;
    spec.class_a = config.class_a;
    spec.class_b = config.class_b;
    spec.samples_per_class = config.samples_per_class;
    spec.injection_fraction = config.injection_fraction;
    spec.seed = seed;
    if (config.injection_source == "cross") {
        const auto [pa, pb] = cross_pool_classes(config);
        spec.pool_class_a = pa;
        spec.pool_class_b = pb;
    }
    std::mt19937 rng(seed);
    TaskDataset task = build_task(full, spec, rng);
    standardize(task);
    return task;
}

void run_experiment(const ExperimentConfig& config, RunMode mode) {
    for (const std::uint32_t seed : config.seeds) {
        const fs::path dir = fs::path(config.out_dir) / ("seed_" + std::to_string(seed));
        fs::create_directories(dir);

        ExperimentConfig effective = config;
        if (mode == RunMode::train) effective.injection_ratio = 0.0;
        write_text_file_atomic((dir / "config_echo.json").string(), echo_experiment_config(effective));

        const TaskDataset task = prepare_task(config, seed);
        const bool inject = mode != RunMode::train && config.injection_ratio > 0.0;
        const auto epochs = checkpoint_epochs(config.epochs, config.checkpoint_stride);

        if (mode == RunMode::compare) {
            std::vector<CompareRow> rows;
            std::vector<PlotSeries> series;

            CquralModel cqural(model_config(config, task, seed));
            auto cq = run_epoch_model(cqural, config, task, seed, inject);
            ClassicalCnnModel cnn(model_config(config, task, seed));
            auto cn = run_epoch_model(cnn, config, task, seed, inject);
            QnnModel qnn(task.train, config.shots, seed);
            // Saliency replay needs conv features; the qnn row runs without it.
            auto qn = run_epoch_model(qnn, config, task, seed, inject, /*allow_replay=*/false);
            SvmModel svm(task.train, config.svm_lambda, config.svm_epochs, seed);
            HybridSvmModel hsvm(task.train, config.hybrid_svm_gamma);

            std::vector<int> truths;
            for (const auto& img : task.test) truths.push_back(img.label);
            const auto epoch_row = [&](const std::string& name, const EpochRunOutputs& out) {
                CompareRow row;
                row.model = name;
                const EpochRecord& last = out.result.records.back();
                row.train_accuracy = last.train_accuracy;
                row.metrics = compute_metrics(last.test_predicted, truths);
                row.auc = roc_points(last.test_score1, truths).auc;
                row.spike = out.result.spike_delta;
                row.spike_defined = out.result.spike_defined;
                return row;
            };
            const auto fit_row = [&](const BinaryClassifier& fit, double loss) {
                const auto out = evaluate_fit_once(fit, task, loss);
                CompareRow row;
                row.model = fit.name();
                row.train_accuracy = out.train_accuracy;
                row.metrics = compute_metrics(out.test_predicted, truths);
                row.auc = roc_points(out.test_score1, truths).auc;
                return row;
            };
            rows.push_back(epoch_row("cqural", cq));
            rows.push_back(epoch_row("cnn", cn));
            rows.push_back(epoch_row("qnn", qn));
            rows.push_back(fit_row(svm, svm.result().epoch_hinge.back()));
            rows.push_back(fit_row(hsvm, hsvm.solution().residual_inf));

            std::vector<std::vector<std::string>> fields;
            for (const auto& row : rows) fields.push_back(compare_row_fields(row));
            write_text_file_atomic(
                (dir / "compare.csv").string(),
                emit_csv({"model", "train_accuracy_pct", "test_accuracy_pct", "precision_0", "recall_0",
                          "precision_1", "recall_1", "auc", "spike_delta"},
                         fields));
            series.push_back(loss_series("cqural", cq.result.records));
            series.push_back(loss_series("cnn", cn.result.records));
            series.push_back(loss_series("qnn", qn.result.records));
            write_loss_svg(dir, series, "training loss, all epoch-trained models");
            continue;
        }

        if (config.model == "svm" || config.model == "hybrid_svm") {
            if (mode == RunMode::explain) {
                throw ConfigError("explain mode needs a conv model (cqural or cnn)");
            }
            if (config.model == "svm") {
                SvmModel svm(task.train, config.svm_lambda, config.svm_epochs, seed);
                const auto out = evaluate_fit_once(svm, task, svm.result().epoch_hinge.back());
                write_fit_once_outputs(dir, task, out, svm.result().epoch_hinge);
            } else {
                HybridSvmModel hsvm(task.train, config.hybrid_svm_gamma);
                const auto out = evaluate_fit_once(hsvm, task, hsvm.solution().residual_inf);
                write_fit_once_outputs(dir, task, out, {});
            }
            continue;
        }

        std::unique_ptr<TrainableModel> model;
        if (config.model == "cqural") {
            model = std::make_unique<CquralModel>(model_config(config, task, seed));
        } else if (config.model == "cnn") {
            model = std::make_unique<ClassicalCnnModel>(model_config(config, task, seed));
        } else if (config.model == "qnn") {
            if (mode == RunMode::explain) {
                throw ConfigError("explain mode needs a conv model (cqural or cnn)");
            }
            model = std::make_unique<QnnModel>(task.train, config.shots, seed);
        } else {
            throw ConfigError("unknown model '" + config.model + "'");
        }

        const auto out = run_epoch_model(*model, config, task, seed, inject);
        write_loss_curve_csv(dir, out.result.records);
        write_timeline_csv(dir, task, out.result.timeline);
        write_predictions_csv(dir, task, out.result.records, epochs);
        write_metrics_csv(dir, task, out.result.records, epochs, out.result, out.forgetting);
        write_loss_svg(dir, {loss_series(config.model, out.result.records)}, "training loss");

        if (mode == RunMode::explain || config.explain) {
            auto* conv = dynamic_cast<ConvFeatureModel*>(model.get());
            if (conv == nullptr) throw ConfigError("explain mode needs a conv model (cqural or cnn)");
            write_saliency_ppms(dir, *conv, task, config.explain_alpha);
        }
    }
}

}  // namespace cqural
