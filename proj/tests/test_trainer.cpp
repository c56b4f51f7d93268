#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "cqural/trainer.hpp"
#include "oracles.hpp"

using namespace cqural;

namespace {

CorrectnessTimeline timeline_from(const std::vector<std::vector<bool>>& correctness,
                                  const std::vector<std::vector<int>>& predicted = {}) {
    CorrectnessTimeline tl;
    for (size_t i = 0; i < correctness.size(); ++i) {
        tl.labels.push_back(0);
        std::vector<CorrectnessTimeline::Point> points;
        for (size_t k = 0; k < correctness[i].size(); ++k) {
            const int pred = predicted.empty() ? (correctness[i][k] ? 0 : 1)
                                               : predicted[i][k];
            points.push_back({static_cast<int>(k) + 1, pred, correctness[i][k]});
        }
        tl.examples.push_back(std::move(points));
    }
    return tl;
}

TaskDataset small_task(int per_class, std::uint32_t seed) {
    SyntheticSpec spec;
    spec.per_class = per_class;
    spec.seed = seed;
    TaskDataset task = synthetic_task(spec);
    standardize(task);
    return task;
}

// Minimal trainable model for structural trainer tests: a biased coin on a
// single parameter, cheap enough for many epochs.
class ScalarModel : public TrainableModel {
public:
    explicit ScalarModel(std::uint32_t seed) {
        std::mt19937 rng(seed);
        std::uniform_real_distribution<double> uni(-1.0, 1.0);
        w_ = Tensor({1}, {uni(rng)});
    }
    Tensor example_loss(Tape& tape, const LabeledImage& img, std::mt19937&, std::uint64_t) override {
        Tensor lp = pure_qnn_op(&tape, pixel_angle(img), w_, 0, 0);
        return nll_scalar(&tape, lp, img.label);
    }
    Prediction predict(const LabeledImage& img) const override {
        const auto [p0, p1] = pure_qnn_forward(pixel_angle(img), w_.data()[0]);
        return {p1 > p0 ? 1 : 0, p1};
    }
    std::vector<Tensor> parameters() override { return {w_}; }
    std::vector<std::pair<std::string, Tensor>> named_parameters() override { return {{"w", w_}}; }
    std::string name() const override { return "scalar"; }

private:
    static double pixel_angle(const LabeledImage& img) {
        double acc = 0.0;
        const int half = static_cast<int>(img.pixels.size()) / 2;
        for (int i = 0; i < half; ++i) acc -= img.pixels[static_cast<size_t>(i)];
        for (int i = half; i < static_cast<int>(img.pixels.size()); ++i) {
            acc += img.pixels[static_cast<size_t>(i)];
        }
        return std::clamp(acc / std::sqrt(static_cast<double>(img.pixels.size())), -1.5, 1.5);
    }
    Tensor w_;
};

class NanModel : public TrainableModel {
public:
    Tensor example_loss(Tape& tape, const LabeledImage&, std::mt19937&, std::uint64_t) override {
        Tensor w = w_;
        tape.watch(w);
        Tensor bad = Tensor::scalar(std::nan(""));
        tape.record("nan", {w.node()}, bad, [](const std::vector<double>&) {});
        return bad;
    }
    Prediction predict(const LabeledImage&) const override { return {0, 0.5}; }
    std::vector<Tensor> parameters() override { return {w_}; }
    std::vector<std::pair<std::string, Tensor>> named_parameters() override { return {{"w", w_}}; }
    std::string name() const override { return "nan"; }

private:
    Tensor w_ = Tensor({1}, {0.0});
};

}  // namespace

TEST_CASE("count_forgetting_events: worked examples") {
    const auto one = count_forgetting_events(timeline_from({{true, true, false, true, false}}));
    CHECK(one[0].events == 2);
    CHECK_FALSE(one[0].unforgettable);

    const auto all_correct = count_forgetting_events(timeline_from({{true, true, true, true}}));
    CHECK(all_correct[0].events == 0);
    CHECK(all_correct[0].unforgettable);

    const auto never = count_forgetting_events(timeline_from({{false, false, false, false}}));
    CHECK(never[0].events == 0);
    CHECK_FALSE(never[0].unforgettable);  // never learned

    const auto late = count_forgetting_events(timeline_from({{false, false, true, true}}));
    CHECK(late[0].events == 0);
    CHECK(late[0].unforgettable);

    CHECK_THROWS_AS(count_forgetting_events(timeline_from({{true}})), UsageError);
}

TEST_CASE("count_forgetting_events matches the brute-force oracle on 1000 random timelines") {
    std::mt19937 rng(17);
    std::uniform_int_distribution<int> len(2, 50);
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    int unforgettable_total = 0, first_learning_total = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        std::vector<bool> correct(static_cast<size_t>(len(rng)));
        const double p = coin(rng);
        for (size_t k = 0; k < correct.size(); ++k) correct[k] = coin(rng) < p;

        const auto got = count_forgetting_events(timeline_from({std::vector<bool>(correct)}));
        const auto ref = oracle::forgetting_reference(correct);
        CHECK(got[0].events == ref.events);
        CHECK(got[0].unforgettable == ref.unforgettable);

        const auto stats = compute_forgetting_stats(timeline_from({std::vector<bool>(correct)}));
        if (stats.per_example[0].unforgettable) ++unforgettable_total;
        if (stats.per_example[0].first_learned_epoch.has_value()) ++first_learning_total;
        if (stats.per_example[0].unforgettable) {
            CHECK(stats.per_example[0].events == 0);
            CHECK(stats.per_example[0].first_learned_epoch.has_value());
        }
    }
    CHECK(first_learning_total >= unforgettable_total);
}

TEST_CASE("label_dispersion: constant, alternating, all-distinct") {
    CHECK(label_dispersion({1, 1, 1, 1}) == doctest::Approx(0.0));
    CHECK(label_dispersion({0, 1, 0, 1}) == doctest::Approx(0.5));
    for (int k = 2; k <= 8; ++k) {
        std::vector<int> labels;
        for (int i = 0; i < k; ++i) labels.push_back(i);
        CHECK(label_dispersion(labels) == doctest::Approx((k - 1.0) / k));
    }
    CHECK_THROWS_AS(label_dispersion({}), UsageError);

    std::mt19937 rng(23);
    std::uniform_int_distribution<int> lab(0, 3);
    for (int trial = 0; trial < 300; ++trial) {
        std::vector<int> labels(static_cast<size_t>(1 + trial % 17));
        for (auto& l : labels) l = lab(rng);
        const double d = label_dispersion(labels);
        CHECK(d == doctest::Approx(oracle::dispersion_reference(labels)));
        CHECK(d >= 0.0);
        CHECK(d < 1.0);
    }
}

TEST_CASE("misclassification_margin: arithmetic and validation") {
    CHECK(misclassification_margin(0.9, 0.1, 0) == doctest::Approx(0.8));
    CHECK(misclassification_margin(0.5, 0.5, 0) == doctest::Approx(0.0));
    CHECK(misclassification_margin(0.1, 0.9, 0) == doctest::Approx(-0.8));
    CHECK(misclassification_margin(0.1, 0.9, 1) == doctest::Approx(0.8));
    CHECK_THROWS_AS(misclassification_margin(0.7, 0.7, 0), UsageError);
}

TEST_CASE("train_epoch: determinism and record shape on the synthetic task") {
    const TaskDataset task = small_task(12, 3);

    const auto run_two_epochs = [&](std::uint32_t seed) {
        ScalarModel model(seed);
        AdamState opt;
        opt.lr = 0.05;
        auto params = model.parameters();
        opt.init(params);
        TrainConfig cfg;
        cfg.seed = seed;
        cfg.epochs = 2;
        cfg.injection_epoch = 1;
        cfg.batch_size = 4;
        std::mt19937 shuffle(1), drop(2);
        std::vector<LabeledImage> train = task.train;
        EpochRecord r1 = train_epoch(model, opt, train, train.size(), task.test, 1, cfg, shuffle,
                                     drop, nullptr, nullptr);
        EpochRecord r2 = train_epoch(model, opt, train, train.size(), task.test, 2, cfg, shuffle,
                                     drop, nullptr, nullptr);
        return std::make_pair(r1, r2);
    };
    const auto [a1, a2] = run_two_epochs(5);
    const auto [b1, b2] = run_two_epochs(5);
    CHECK(a1.train_loss == b1.train_loss);
    CHECK(a2.train_loss == b2.train_loss);
    CHECK(a1.predicted == b1.predicted);
    CHECK(a2.correct == b2.correct);
    CHECK(a1.correct.size() == task.train.size());
    CHECK(a1.test_predicted.size() == task.test.size());
}

TEST_CASE("train_epoch: separable synthetic task is learned within 30 epochs") {
    const TaskDataset task = small_task(20, 9);
    ScalarModel model(1);
    AdamState opt;
    opt.lr = 0.05;
    auto params = model.parameters();
    opt.init(params);
    TrainConfig cfg;
    cfg.seed = 4;
    cfg.epochs = 30;
    cfg.injection_epoch = 30;
    cfg.batch_size = 8;
    std::mt19937 shuffle(1), drop(2);
    std::vector<LabeledImage> train = task.train;
    EpochRecord last;
    for (int e = 1; e <= 30; ++e) {
        last = train_epoch(model, opt, train, train.size(), task.test, e, cfg, shuffle, drop,
                           nullptr, nullptr);
    }
    CHECK(last.train_accuracy >= 0.95);
}

TEST_CASE("train_epoch: non-finite loss aborts with the batch index") {
    const TaskDataset task = small_task(6, 2);
    NanModel model;
    AdamState opt;
    auto params = model.parameters();
    opt.init(params);
    TrainConfig cfg;
    cfg.epochs = 1;
    cfg.injection_epoch = 1;
    std::mt19937 shuffle(1), drop(2);
    std::vector<LabeledImage> train = task.train;
    CHECK_THROWS_WITH_AS(train_epoch(model, opt, train, train.size(), task.test, 1, cfg, shuffle,
                                     drop, nullptr, nullptr),
                         doctest::Contains("batch 0"), NumericError);
}

TEST_CASE("run_continual: rho = 0 reproduces plain epoch-by-epoch training bit-exactly") {
    const TaskDataset task = small_task(10, 6);
    TrainConfig cfg;
    cfg.epochs = 6;
    cfg.injection_epoch = 4;
    cfg.injection_ratio = 0.0;
    cfg.batch_size = 4;
    cfg.lr = 0.05;
    cfg.seed = 12;

    ScalarModel via_continual(3);
    const ContinualResult result = run_continual(via_continual, cfg, task);

    // Independent plain loop with the same derived seeds.
    ScalarModel manual(3);
    AdamState opt;
    opt.lr = cfg.lr;
    auto params = manual.parameters();
    opt.init(params);
    std::mt19937 shuffle(static_cast<std::uint32_t>(derive_seed(cfg.seed, 1)));
    std::mt19937 drop(static_cast<std::uint32_t>(derive_seed(cfg.seed, 2)));
    std::vector<LabeledImage> train = task.train;
    for (int e = 1; e <= cfg.epochs; ++e) {
        const EpochRecord rec = train_epoch(manual, opt, train, train.size(), task.test, e, cfg,
                                            shuffle, drop, nullptr, nullptr);
        CHECK(rec.train_loss == result.records[static_cast<size_t>(e) - 1].train_loss);
        CHECK(rec.predicted == result.records[static_cast<size_t>(e) - 1].predicted);
    }
    CHECK(result.injected_count == 0);
    CHECK(result.spike_defined);
}

TEST_CASE("run_continual: injection grows the train set and tracks only the original examples") {
    const TaskDataset task = small_task(100, 8);  // train 160, pool 80
    REQUIRE(task.train.size() == 160);
    TrainConfig cfg;
    cfg.epochs = 3;
    cfg.injection_epoch = 2;
    cfg.injection_ratio = 0.5;
    cfg.batch_size = 16;
    cfg.lr = 0.05;
    cfg.seed = 2;

    ScalarModel model(4);
    const ContinualResult result = run_continual(model, cfg, task);
    CHECK(result.injected_count == 80);  // ceil(0.5 * 160)
    CHECK(result.timeline.example_count() == 160);
    CHECK(result.timeline.checkpoint_count() == 3);
    CHECK(result.records.back().correct.size() == 160);
    CHECK(result.spike_defined);
    CHECK(result.spike_delta ==
          doctest::Approx(result.records[1].train_loss - result.records[0].train_loss));

    // Epochs strictly increase, one entry per checkpoint.
    for (const auto& points : result.timeline.examples) {
        for (size_t k = 1; k < points.size(); ++k) CHECK(points[k].epoch == points[k - 1].epoch + 1);
    }
}

TEST_CASE("run_continual: full-run determinism and pool exhaustion") {
    const TaskDataset task = small_task(10, 5);
    TrainConfig cfg;
    cfg.epochs = 4;
    cfg.injection_epoch = 3;
    cfg.injection_ratio = 0.5;
    cfg.batch_size = 4;
    cfg.lr = 0.05;
    cfg.seed = 31;

    ScalarModel m1(6), m2(6);
    const ContinualResult r1 = run_continual(m1, cfg, task);
    const ContinualResult r2 = run_continual(m2, cfg, task);
    REQUIRE(r1.records.size() == r2.records.size());
    for (size_t e = 0; e < r1.records.size(); ++e) {
        CHECK(r1.records[e].train_loss == r2.records[e].train_loss);
        CHECK(r1.records[e].test_accuracy == r2.records[e].test_accuracy);
    }

    TrainConfig hungry = cfg;
    hungry.injection_ratio = 50.0;
    ScalarModel m3(6);
    CHECK_THROWS_AS(run_continual(m3, hungry, task), DataError);

    TrainConfig bad = cfg;
    bad.injection_epoch = 9;  // > epochs
    ScalarModel m4(6);
    CHECK_THROWS_AS(run_continual(m4, bad, task), ConfigError);
}

TEST_CASE("compute_forgetting_stats: margins and first-learning epochs") {
    CorrectnessTimeline tl = timeline_from({{false, true, true}, {true, false, false}});
    tl.labels = {1, 0};
    tl.final_prob1 = {0.9, 0.7};
    const ForgettingStats stats = compute_forgetting_stats(tl);
    REQUIRE(stats.per_example.size() == 2);
    CHECK(stats.per_example[0].first_learned_epoch == 2);
    CHECK(stats.per_example[0].final_margin == doctest::Approx(0.8));
    CHECK(stats.per_example[0].unforgettable);
    CHECK(stats.per_example[1].first_learned_epoch == 1);
    CHECK(stats.per_example[1].events == 1);
    CHECK(stats.per_example[1].final_margin == doctest::Approx(-0.4));
    CHECK(stats.unforgettable_count == 1);
}
