#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "cqural/models.hpp"
#include "cqural/tensor.hpp"

namespace cqural {

struct SaliencyMap {
    int height = 0;
    int width = 0;
    std::vector<double> values;  // feature-map resolution, in [0, 1]
    int up_height = 0;
    int up_width = 0;
    std::vector<double> upsampled;  // input resolution
};

struct GradcamResult {
    SaliencyMap map;
    std::vector<double> channel_weights;  // alpha_k, spatial means of d(logP)/dA^k
};

// Map assembly from raw activations and their gradients: alpha_k is the
// spatial mean of the gradient over channel k, map = ReLU(sum_k alpha_k A^k)
// normalized by its max (a zero map stays zero).
GradcamResult saliency_from_gradients(const std::vector<double>& activations,
                                      const std::vector<double>& act_grads, int channels, int h,
                                      int w);

// Gradient-weighted class activation map over the conv2 features, taking
// the gradient of the target-class log-probability. Read-only on the model:
// parameter values are untouched and gradients are cleared before returning.
GradcamResult gradcam(ConvFeatureModel& model, const LabeledImage& img, int target_class);

// Separable bilinear interpolation with corner alignment; target dims must
// be at least the source dims.
std::vector<double> bilinear_upsample(const std::vector<double>& src, int src_h, int src_w,
                                      int dst_h, int dst_w);

struct ReplayEntry {
    LabeledImage image;
    int label = 0;
    SaliencyMap map;  // frozen at admission
    double confidence = 0.0;
};

// Two-class reservoir buffer of confident correct predictions. Admission
// requires predicted == label and confidence above the threshold; once a
// class is full, a seeded reservoir replacement keeps each admitted
// candidate equally likely to stay.
class ReplayBuffer {
public:
    explicit ReplayBuffer(int capacity_per_class = 32, std::uint32_t seed = 0,
                          double confidence_threshold = 0.90);

    bool admit(const ReplayEntry& candidate, int predicted_label);
    std::vector<const ReplayEntry*> sample(size_t count, std::mt19937& rng) const;

    size_t size() const { return class0_.size() + class1_.size(); }
    int capacity_per_class() const { return capacity_; }
    double confidence_threshold() const { return threshold_; }
    const std::vector<ReplayEntry>& class_entries(int label) const;

private:
    int capacity_;
    double threshold_;
    std::mt19937 rng_;
    long seen_[2] = {0, 0};
    std::vector<ReplayEntry> class0_, class1_;
};

// Squared Frobenius distance between the current normalized GradCAM map of
// the taped conv features (with fixed channel weights) and a stored map.
// Gradient flows through the activations only.
Tensor saliency_penalty_op(Tape* tape, const Tensor& conv_features,
                           const std::vector<double>& channel_weights, const SaliencyMap& stored);

// Task loss over (batch plus sampled replay inputs) plus
// lambda * mean squared map drift over the sampled entries.
Tensor saliency_replay_loss(ConvFeatureModel& model, std::span<const LabeledImage> batch,
                            const ReplayBuffer& buffer, double lambda, Tape& tape,
                            std::mt19937& dropout_rng, std::mt19937& replay_rng,
                            std::uint64_t shot_seed_base, bool replay_in_task_loss = true);

}  // namespace cqural
