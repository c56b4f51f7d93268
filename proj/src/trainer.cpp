#include "cqural/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace cqural {

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
    std::uint64_t x = base * 0x9E3779B97F4A7C15ull + stream + 1;
    x ^= x >> 30;
    x *= 0xBF58476D1CE4E5B9ull;
    x ^= x >> 27;
    x *= 0x94D049BB133111EBull;
    x ^= x >> 31;
    return x;
}

namespace {

void validate_config(const TrainConfig& cfg) {
    if (cfg.epochs < 1) throw ConfigError("epochs must be at least 1");
    if (cfg.batch_size < 1) throw ConfigError("batch_size must be at least 1");
    if (cfg.checkpoint_stride < 1) throw ConfigError("checkpoint_stride must be at least 1");
    if (cfg.injection_epoch < 1 || cfg.injection_epoch > cfg.epochs) {
        throw ConfigError("injection_epoch must lie in [1, epochs]");
    }
    if (cfg.injection_ratio < 0.0) throw ConfigError("injection_ratio must be nonnegative");
    if (cfg.lr <= 0.0) throw ConfigError("lr must be positive");
}

}  // namespace

EpochRecord train_epoch(TrainableModel& model, AdamState& optimizer,
                        std::vector<LabeledImage>& train, size_t tracked_count,
                        const std::vector<LabeledImage>& test, int epoch, const TrainConfig& cfg,
                        std::mt19937& shuffle_rng, std::mt19937& dropout_rng,
                        ReplayBuffer* replay_buffer, std::mt19937* replay_rng) {
    if (train.empty()) throw DataError("train_epoch: empty train set");

    std::vector<size_t> order(train.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::shuffle(order.begin(), order.end(), shuffle_rng);

    auto params = model.parameters();
    const std::uint64_t seed_base = derive_seed(cfg.seed, static_cast<std::uint64_t>(epoch));

    double loss_sum = 0.0;
    int batch_count = 0;
    for (size_t start = 0; start < order.size(); start += static_cast<size_t>(cfg.batch_size)) {
        const size_t stop = std::min(order.size(), start + static_cast<size_t>(cfg.batch_size));
        std::vector<LabeledImage> batch(stop - start);
        for (size_t i = start; i < stop; ++i) batch[i - start] = train[order[i]];

        Tape tape;
        Tensor loss;
        const std::uint64_t batch_seed = derive_seed(seed_base, static_cast<std::uint64_t>(start));
        if (replay_buffer != nullptr && replay_buffer->size() > 0) {
            auto* conv_model = dynamic_cast<ConvFeatureModel*>(&model);
            if (conv_model == nullptr) {
                throw UsageError("saliency replay requires a conv-feature model");
            }
            loss = saliency_replay_loss(*conv_model, batch, *replay_buffer, cfg.replay.lambda, tape,
                                        dropout_rng, *replay_rng, batch_seed,
                                        cfg.replay.replay_in_task_loss);
        } else {
            std::vector<Tensor> losses;
            losses.reserve(batch.size());
            std::uint64_t k = 0;
            for (const LabeledImage& img : batch) {
                losses.push_back(model.example_loss(tape, img, dropout_rng, derive_seed(batch_seed, k++)));
            }
            loss = mean_scalars(&tape, losses);
        }

        if (!std::isfinite(loss.item())) {
            throw NumericError("non-finite training loss in batch " + std::to_string(batch_count) +
                               " of epoch " + std::to_string(epoch));
        }
        loss_sum += loss.item();
        ++batch_count;
        tape.backward(loss);
        adam_step(params, optimizer);
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / static_cast<double>(batch_count);
    rec.predicted.reserve(tracked_count);
    rec.correct.reserve(tracked_count);
    int train_hits = 0;
    for (size_t i = 0; i < train.size(); ++i) {
        const Prediction p = model.predict(train[i]);
        if (p.label == train[i].label) ++train_hits;
        if (i < tracked_count) {
            rec.predicted.push_back(p.label);
            rec.correct.push_back(p.label == train[i].label ? 1 : 0);
        }
    }
    rec.train_accuracy = static_cast<double>(train_hits) / static_cast<double>(train.size());
    int test_hits = 0;
    rec.test_predicted.reserve(test.size());
    rec.test_score1.reserve(test.size());
    for (const LabeledImage& img : test) {
        const Prediction p = model.predict(img);
        if (p.label == img.label) ++test_hits;
        rec.test_predicted.push_back(p.label);
        rec.test_score1.push_back(p.score1);
    }
    rec.test_accuracy = test.empty() ? 0.0 : static_cast<double>(test_hits) / static_cast<double>(test.size());
    return rec;
}

namespace {

// Class-balanced draw of `count` pool examples, seeded; throws when the pool
// cannot cover the request.
std::vector<LabeledImage> draw_injection(const std::vector<LabeledImage>& pool, int count,
                                         std::mt19937& rng) {
    std::vector<size_t> by_class[2];
    for (size_t i = 0; i < pool.size(); ++i) {
        if (pool[i].label == 0 || pool[i].label == 1) by_class[pool[i].label].push_back(i);
    }
    const int want0 = (count + 1) / 2;
    const int want1 = count - want0;
    if (static_cast<int>(by_class[0].size()) < want0 || static_cast<int>(by_class[1].size()) < want1) {
        throw DataError("injection pool exhausted: need " + std::to_string(want0) + "+" +
                        std::to_string(want1) + " examples, pool holds " +
                        std::to_string(by_class[0].size()) + "+" + std::to_string(by_class[1].size()));
    }
    std::shuffle(by_class[0].begin(), by_class[0].end(), rng);
    std::shuffle(by_class[1].begin(), by_class[1].end(), rng);

    std::vector<LabeledImage> out;
    out.reserve(static_cast<size_t>(count));
    for (int i = 0; i < want0; ++i) out.push_back(pool[by_class[0][static_cast<size_t>(i)]]);
    for (int i = 0; i < want1; ++i) out.push_back(pool[by_class[1][static_cast<size_t>(i)]]);
    return out;
}

}  // namespace

ContinualResult run_continual(TrainableModel& model, const TrainConfig& cfg, const TaskDataset& task) {
    validate_config(cfg);
    if (task.train.empty()) throw DataError("run_continual: empty train partition");

    std::vector<LabeledImage> train = task.train;
    const size_t tracked_count = train.size();

    AdamState optimizer;
    optimizer.lr = cfg.lr;
    auto params = model.parameters();
    optimizer.init(params);

    std::mt19937 shuffle_rng(static_cast<std::uint32_t>(derive_seed(cfg.seed, 1)));
    std::mt19937 dropout_rng(static_cast<std::uint32_t>(derive_seed(cfg.seed, 2)));
    std::mt19937 injection_rng(static_cast<std::uint32_t>(derive_seed(cfg.seed, 3)));
    std::mt19937 replay_rng(static_cast<std::uint32_t>(derive_seed(cfg.seed, 4)));

    ReplayBuffer buffer(cfg.replay.capacity_per_class,
                        static_cast<std::uint32_t>(derive_seed(cfg.seed, 5)),
                        cfg.replay.confidence_threshold);
    auto* conv_model = dynamic_cast<ConvFeatureModel*>(&model);
    if (cfg.replay.enabled && conv_model == nullptr) {
        throw UsageError("saliency replay requires a conv-feature model");
    }

    ContinualResult result;
    result.timeline.labels.reserve(tracked_count);
    for (size_t i = 0; i < tracked_count; ++i) result.timeline.labels.push_back(task.train[i].label);
    result.timeline.examples.assign(tracked_count, {});

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        if (epoch == cfg.injection_epoch && cfg.injection_ratio > 0.0) {
            const int inject = static_cast<int>(std::ceil(cfg.injection_ratio *
                                                          static_cast<double>(train.size())));
            auto extra = draw_injection(task.injection_pool, inject, injection_rng);
            for (auto& img : extra) train.push_back(std::move(img));
            result.injected_count = inject;
        }

        EpochRecord rec = train_epoch(model, optimizer, train, tracked_count, task.test, epoch, cfg,
                                      shuffle_rng, dropout_rng, cfg.replay.enabled ? &buffer : nullptr,
                                      &replay_rng);
        for (size_t i = 0; i < tracked_count; ++i) {
            result.timeline.examples[i].push_back(
                {epoch, rec.predicted[i], rec.correct[i] != 0});
        }
        result.records.push_back(std::move(rec));

        if (cfg.replay.enabled) {
            for (size_t i = 0; i < train.size(); ++i) {
                const Prediction p = model.predict(train[i]);
                const double confidence = std::max(p.score1, 1.0 - p.score1);
                if (p.label != train[i].label || !(confidence > cfg.replay.confidence_threshold)) {
                    continue;
                }
                ReplayEntry entry;
                entry.image = train[i];
                entry.label = train[i].label;
                entry.confidence = confidence;
                entry.map = gradcam(*conv_model, train[i], train[i].label).map;
                buffer.admit(entry, p.label);
            }
        }
    }

    result.timeline.final_prob1.reserve(tracked_count);
    for (size_t i = 0; i < tracked_count; ++i) {
        result.timeline.final_prob1.push_back(model.predict(train[i]).score1);
    }

    if (cfg.injection_epoch >= 2 && cfg.injection_epoch <= cfg.epochs) {
        result.spike_delta = result.records[static_cast<size_t>(cfg.injection_epoch) - 1].train_loss -
                             result.records[static_cast<size_t>(cfg.injection_epoch) - 2].train_loss;
        result.spike_defined = true;
    }
    return result;
}

std::vector<ForgettingCounts> count_forgetting_events(const CorrectnessTimeline& timeline) {
    if (timeline.checkpoint_count() < 2) {
        throw UsageError("count_forgetting_events: need at least 2 checkpoints");
    }
    std::vector<ForgettingCounts> out;
    out.reserve(timeline.example_count());
    for (const auto& points : timeline.examples) {
        ForgettingCounts fc;
        int first_correct = -1;
        for (size_t k = 0; k < points.size(); ++k) {
            if (points[k].correct && first_correct < 0) first_correct = static_cast<int>(k);
            if (k > 0 && points[k - 1].correct && !points[k].correct) ++fc.events;
        }
        if (first_correct >= 0) {
            fc.unforgettable = true;
            for (size_t k = static_cast<size_t>(first_correct); k < points.size(); ++k) {
                if (!points[k].correct) {
                    fc.unforgettable = false;
                    break;
                }
            }
        }
        out.push_back(fc);
    }
    return out;
}

double label_dispersion(const std::vector<int>& predicted_labels) {
    if (predicted_labels.empty()) throw UsageError("label_dispersion: need at least 1 checkpoint");
    std::map<int, int> freq;
    for (int label : predicted_labels) ++freq[label];
    // Ties resolve toward the smaller label id via ascending map order.
    int best_count = 0;
    for (const auto& [label, count] : freq) {
        if (count > best_count) best_count = count;
    }
    return 1.0 - static_cast<double>(best_count) / static_cast<double>(predicted_labels.size());
}

double misclassification_margin(double p0, double p1, int true_label) {
    if (std::abs(p0 + p1 - 1.0) > 1e-6) {
        throw UsageError("misclassification_margin: probabilities must sum to 1");
    }
    return true_label == 0 ? p0 - p1 : p1 - p0;
}

ForgettingStats compute_forgetting_stats(const CorrectnessTimeline& timeline) {
    ForgettingStats stats;
    const auto counts = count_forgetting_events(timeline);
    stats.per_example.reserve(counts.size());
    for (size_t i = 0; i < counts.size(); ++i) {
        ForgettingExample ex;
        ex.events = counts[i].events;
        ex.unforgettable = counts[i].unforgettable;
        const auto& points = timeline.examples[i];
        for (size_t k = 0; k < points.size(); ++k) {
            if (points[k].correct) {
                ex.first_learned_epoch = points[k].epoch;
                break;
            }
        }
        std::vector<int> labels;
        labels.reserve(points.size());
        for (const auto& p : points) labels.push_back(p.predicted);
        ex.dispersion = label_dispersion(labels);
        if (i < timeline.final_prob1.size()) {
            const double p1 = timeline.final_prob1[i];
            ex.final_margin = misclassification_margin(1.0 - p1, p1, timeline.labels[i]);
        }
        stats.mean_events += ex.events;
        stats.mean_dispersion += ex.dispersion;
        if (ex.unforgettable) ++stats.unforgettable_count;
        stats.per_example.push_back(ex);
    }
    if (!stats.per_example.empty()) {
        stats.mean_events /= static_cast<double>(stats.per_example.size());
        stats.mean_dispersion /= static_cast<double>(stats.per_example.size());
    }
    return stats;
}

}  // namespace cqural
