#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "cqural/adam.hpp"
#include "cqural/data.hpp"
#include "cqural/explain.hpp"
#include "cqural/models.hpp"

namespace cqural {

struct ReplaySettings {
    bool enabled = false;
    double lambda = 1.0;
    double confidence_threshold = 0.90;
    int capacity_per_class = 32;
    bool replay_in_task_loss = true;
};

struct TrainConfig {
    int epochs = 30;
    int checkpoint_stride = 5;  // reporting rows at epochs 5, 10, 15, ...
    int batch_size = 8;
    double lr = 0.001;
    std::uint32_t seed = 0;
    int injection_epoch = 29;      // 1-based; new samples appear at the start of this epoch
    double injection_ratio = 0.5;  // rho; 0 disables injection
    ReplaySettings replay;
};

struct EpochRecord {
    int epoch = 0;  // 1-based
    double train_loss = 0.0;
    double train_accuracy = 0.0;
    double test_accuracy = 0.0;
    std::vector<int> predicted;        // tracked set, eval mode after the pass
    std::vector<std::uint8_t> correct;
    std::vector<int> test_predicted;   // test set, same eval pass
    std::vector<double> test_score1;
};

// Per-epoch prediction history of the tracked (pre-injection) train set.
struct CorrectnessTimeline {
    struct Point {
        int epoch = 0;
        int predicted = 0;
        bool correct = false;
    };
    std::vector<int> labels;                        // true label per tracked example
    std::vector<std::vector<Point>> examples;       // [example][checkpoint]
    std::vector<double> final_prob1;                // class-1 probability at the last checkpoint

    size_t example_count() const { return examples.size(); }
    size_t checkpoint_count() const { return examples.empty() ? 0 : examples[0].size(); }
};

struct ForgettingExample {
    int events = 0;
    bool unforgettable = false;
    std::optional<int> first_learned_epoch;
    double final_margin = 0.0;
    double dispersion = 0.0;
};

struct ForgettingStats {
    std::vector<ForgettingExample> per_example;
    int unforgettable_count = 0;
    double mean_events = 0.0;
    double mean_dispersion = 0.0;
};

struct ContinualResult {
    std::vector<EpochRecord> records;
    CorrectnessTimeline timeline;
    double spike_delta = 0.0;  // loss[injection_epoch] - loss[injection_epoch - 1]
    bool spike_defined = false;
    int injected_count = 0;
};

// One pass of seeded-shuffled minibatches: forward, NLL, backward, Adam.
// Correctness is recorded in eval mode after the pass over the tracked
// prefix of the train set; test accuracy over `test`.
EpochRecord train_epoch(TrainableModel& model, AdamState& optimizer,
                        std::vector<LabeledImage>& train, size_t tracked_count,
                        const std::vector<LabeledImage>& test, int epoch, const TrainConfig& cfg,
                        std::mt19937& shuffle_rng, std::mt19937& dropout_rng,
                        ReplayBuffer* replay_buffer, std::mt19937* replay_rng);

// Full run with the mid-training injection protocol: trains normally until
// injection_epoch, then appends ceil(rho * |train|) class-balanced pool
// examples and continues. Injected examples are trained on but not tracked.
ContinualResult run_continual(TrainableModel& model, const TrainConfig& cfg, const TaskDataset& task);

struct ForgettingCounts {
    int events = 0;
    bool unforgettable = false;
};

// Correct -> incorrect transitions between consecutive checkpoints, and the
// never-forgotten-after-learning flag. Never-correct examples report zero
// events and are not unforgettable.
std::vector<ForgettingCounts> count_forgetting_events(const CorrectnessTimeline& timeline);

// 1 - modal_frequency / checkpoints over one example's predicted labels.
double label_dispersion(const std::vector<int>& predicted_labels);

// p(true) - p(other) for a two-class probability pair.
double misclassification_margin(double p0, double p1, int true_label);

ForgettingStats compute_forgetting_stats(const CorrectnessTimeline& timeline);

// SplitMix-style seed derivation so that runs are reproducible from one
// config seed.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

}  // namespace cqural
