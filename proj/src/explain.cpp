#include "cqural/explain.hpp"

#include <algorithm>
#include <cmath>

namespace cqural {

namespace {

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
    std::uint64_t x = a * 0x9E3779B97F4A7C15ull + b + 1;
    x ^= x >> 30;
    x *= 0xBF58476D1CE4E5B9ull;
    x ^= x >> 27;
    x *= 0x94D049BB133111EBull;
    x ^= x >> 31;
    return x;
}

}  // namespace

GradcamResult saliency_from_gradients(const std::vector<double>& activations,
                                      const std::vector<double>& act_grads, int channels, int h,
                                      int w) {
    const int plane = h * w;
    if (activations.size() != static_cast<size_t>(channels) * plane) {
        throw DimensionError("saliency_from_gradients: activation size mismatch");
    }

    GradcamResult out;
    out.channel_weights.assign(static_cast<size_t>(channels), 0.0);
    if (!act_grads.empty()) {
        if (act_grads.size() != activations.size()) {
            throw DimensionError("saliency_from_gradients: gradient size mismatch");
        }
        for (int c = 0; c < channels; ++c) {
            double acc = 0.0;
            for (int p = 0; p < plane; ++p) acc += act_grads[static_cast<size_t>(c * plane + p)];
            out.channel_weights[static_cast<size_t>(c)] = acc / static_cast<double>(plane);
        }
    }

    out.map.height = h;
    out.map.width = w;
    out.map.values.assign(static_cast<size_t>(plane), 0.0);
    double max_v = 0.0;
    for (int p = 0; p < plane; ++p) {
        double s = 0.0;
        for (int c = 0; c < channels; ++c) {
            s += out.channel_weights[static_cast<size_t>(c)] * activations[static_cast<size_t>(c * plane + p)];
        }
        const double r = s > 0.0 ? s : 0.0;
        out.map.values[static_cast<size_t>(p)] = r;
        max_v = std::max(max_v, r);
    }
    if (max_v > 0.0) {
        for (double& v : out.map.values) v /= max_v;
    }
    return out;
}

GradcamResult gradcam(ConvFeatureModel& model, const LabeledImage& img, int target_class) {
    if (target_class < 0 || target_class > 1) {
        throw UsageError("gradcam: target class must be 0 or 1, got " + std::to_string(target_class));
    }

    Tape tape;
    std::mt19937 unused(0);
    TapedForward fwd = model.forward_features(&tape, img, Mode::eval, unused, 0);
    Tensor target_lp = pick(&tape, fwd.log_probs, target_class);
    tape.backward(target_lp);

    const Tensor& features = fwd.conv2_features;
    GradcamResult out = saliency_from_gradients(features.values(), features.storage()->grad,
                                                features.dim(1), features.dim(2), features.dim(3));
    out.map.up_height = img.height;
    out.map.up_width = img.width;
    out.map.upsampled = bilinear_upsample(out.map.values, features.dim(2), features.dim(3),
                                          img.height, img.width);

    model.zero_grads();
    return out;
}

std::vector<double> bilinear_upsample(const std::vector<double>& src, int src_h, int src_w,
                                      int dst_h, int dst_w) {
    if (src_h < 1 || src_w < 1 || src.size() != static_cast<size_t>(src_h) * src_w) {
        throw DimensionError("bilinear_upsample: source is empty or mis-sized");
    }
    if (dst_h < src_h || dst_w < src_w) {
        throw DimensionError("bilinear_upsample: target " + std::to_string(dst_h) + "x" +
                             std::to_string(dst_w) + " smaller than source " + std::to_string(src_h) +
                             "x" + std::to_string(src_w));
    }

    std::vector<double> out(static_cast<size_t>(dst_h) * dst_w);
    const double sy = dst_h > 1 ? static_cast<double>(src_h - 1) / (dst_h - 1) : 0.0;
    const double sx = dst_w > 1 ? static_cast<double>(src_w - 1) / (dst_w - 1) : 0.0;
    for (int y = 0; y < dst_h; ++y) {
        const double fy = y * sy;
        const int y0 = std::min(static_cast<int>(fy), src_h - 1);
        const int y1 = std::min(y0 + 1, src_h - 1);
        const double ty = fy - y0;
        for (int x = 0; x < dst_w; ++x) {
            const double fx = x * sx;
            const int x0 = std::min(static_cast<int>(fx), src_w - 1);
            const int x1 = std::min(x0 + 1, src_w - 1);
            const double tx = fx - x0;
            const double top = src[static_cast<size_t>(y0 * src_w + x0)] * (1.0 - tx) +
                               src[static_cast<size_t>(y0 * src_w + x1)] * tx;
            const double bot = src[static_cast<size_t>(y1 * src_w + x0)] * (1.0 - tx) +
                               src[static_cast<size_t>(y1 * src_w + x1)] * tx;
            out[static_cast<size_t>(y * dst_w + x)] = top * (1.0 - ty) + bot * ty;
        }
    }
    return out;
}

ReplayBuffer::ReplayBuffer(int capacity_per_class, std::uint32_t seed, double confidence_threshold)
    : capacity_(capacity_per_class), threshold_(confidence_threshold), rng_(seed) {
    if (capacity_per_class < 1) throw ParameterError("ReplayBuffer: capacity must be positive");
}

const std::vector<ReplayEntry>& ReplayBuffer::class_entries(int label) const {
    if (label != 0 && label != 1) throw UsageError("ReplayBuffer: label must be 0 or 1");
    return label == 0 ? class0_ : class1_;
}

bool ReplayBuffer::admit(const ReplayEntry& candidate, int predicted_label) {
    if (predicted_label != candidate.label) return false;
    if (!(candidate.confidence > threshold_)) return false;
    auto& slot = candidate.label == 0 ? class0_ : class1_;
    long& seen = seen_[candidate.label == 0 ? 0 : 1];
    ++seen;
    if (static_cast<int>(slot.size()) < capacity_) {
        slot.push_back(candidate);
        return true;
    }
    std::uniform_int_distribution<long> uni(0, seen - 1);
    const long j = uni(rng_);
    if (j < capacity_) {
        slot[static_cast<size_t>(j)] = candidate;
        return true;
    }
    return false;
}

std::vector<const ReplayEntry*> ReplayBuffer::sample(size_t count, std::mt19937& rng) const {
    std::vector<const ReplayEntry*> all;
    all.reserve(size());
    for (const auto& e : class0_) all.push_back(&e);
    for (const auto& e : class1_) all.push_back(&e);
    count = std::min(count, all.size());
    for (size_t i = 0; i < count; ++i) {
        std::uniform_int_distribution<size_t> uni(i, all.size() - 1);
        std::swap(all[i], all[uni(rng)]);
    }
    all.resize(count);
    return all;
}

Tensor saliency_penalty_op(Tape* tape, const Tensor& conv_features,
                           const std::vector<double>& channel_weights, const SaliencyMap& stored) {
    if (conv_features.shape().size() != 4 || conv_features.dim(0) != 1) {
        throw DimensionError("saliency_penalty_op: conv features must be 1xCxHxW");
    }
    const int channels = conv_features.dim(1), h = conv_features.dim(2), w = conv_features.dim(3);
    if (static_cast<int>(channel_weights.size()) != channels) {
        throw DimensionError("saliency_penalty_op: channel weight count mismatch");
    }
    if (stored.height != h || stored.width != w) {
        throw DimensionError("saliency_penalty_op: stored map " + std::to_string(stored.height) + "x" +
                             std::to_string(stored.width) + " vs features " + std::to_string(h) + "x" +
                             std::to_string(w));
    }

    const int plane = h * w;
    std::vector<double> weighted(static_cast<size_t>(plane), 0.0);
    std::vector<double> rectified(static_cast<size_t>(plane), 0.0);
    double max_v = 0.0;
    int argmax = -1;
    for (int p = 0; p < plane; ++p) {
        double s = 0.0;
        for (int c = 0; c < channels; ++c) {
            s += channel_weights[static_cast<size_t>(c)] * conv_features.data()[c * plane + p];
        }
        weighted[static_cast<size_t>(p)] = s;
        rectified[static_cast<size_t>(p)] = s > 0.0 ? s : 0.0;
        if (rectified[static_cast<size_t>(p)] > max_v) {
            max_v = rectified[static_cast<size_t>(p)];
            argmax = p;
        }
    }

    const double inv_max = max_v > 0.0 ? 1.0 / max_v : 0.0;
    double value = 0.0;
    std::vector<double> diff(static_cast<size_t>(plane), 0.0);
    for (int p = 0; p < plane; ++p) {
        const double d = rectified[static_cast<size_t>(p)] * inv_max - stored.values[static_cast<size_t>(p)];
        diff[static_cast<size_t>(p)] = d;
        value += d * d;
    }

    Tensor out = Tensor::scalar(value);
    if (tape) {
        int fi = tape->node_of(conv_features);
        auto fs = conv_features.storage();
        auto weights = channel_weights;
        // Channel weights are frozen per step; the relu mask and the max
        // normalization differentiate exactly (subgradient at the argmax).
        tape->record("saliency_penalty", {fi}, out, [=](const std::vector<double>& og) {
            if (fs->grad.empty()) fs->grad.assign(fs->data.size(), 0.0);
            if (inv_max == 0.0) return;
            double diff_dot_map = 0.0;
            for (int p = 0; p < plane; ++p) {
                diff_dot_map += diff[static_cast<size_t>(p)] * rectified[static_cast<size_t>(p)] * inv_max;
            }
            for (int p = 0; p < plane; ++p) {
                if (weighted[static_cast<size_t>(p)] <= 0.0) continue;
                double g = diff[static_cast<size_t>(p)];
                if (p == argmax) g -= diff_dot_map;
                g *= og[0] * 2.0 * inv_max;
                for (int c = 0; c < channels; ++c) {
                    fs->grad[static_cast<size_t>(c * plane + p)] += g * weights[static_cast<size_t>(c)];
                }
            }
        });
    }
    return out;
}

Tensor saliency_replay_loss(ConvFeatureModel& model, std::span<const LabeledImage> batch,
                            const ReplayBuffer& buffer, double lambda, Tape& tape,
                            std::mt19937& dropout_rng, std::mt19937& replay_rng,
                            std::uint64_t shot_seed_base, bool replay_in_task_loss) {
    if (lambda < 0.0) throw ParameterError("saliency_replay_loss: lambda must be nonnegative");
    if (batch.empty()) throw UsageError("saliency_replay_loss: empty batch");

    const auto sampled = buffer.sample(batch.size(), replay_rng);

    // Channel weights for the current parameters come first, on their own
    // tapes, so the gradcam backward passes cannot leak into this batch.
    std::vector<std::vector<double>> alphas;
    alphas.reserve(sampled.size());
    for (const ReplayEntry* entry : sampled) {
        alphas.push_back(gradcam(model, entry->image, entry->label).channel_weights);
    }

    std::vector<Tensor> losses;
    std::vector<Tensor> penalties;
    std::uint64_t k = 0;
    for (const LabeledImage& img : batch) {
        losses.push_back(model.example_loss(tape, img, dropout_rng, mix_seed(shot_seed_base, k++)));
    }
    for (size_t i = 0; i < sampled.size(); ++i) {
        TapedForward fwd = model.forward_features(&tape, sampled[i]->image, Mode::train, dropout_rng,
                                                  mix_seed(shot_seed_base, k++));
        if (replay_in_task_loss) {
            losses.push_back(nll_scalar(&tape, fwd.log_probs, sampled[i]->label));
        }
        if (lambda > 0.0) {
            penalties.push_back(saliency_penalty_op(&tape, fwd.conv2_features, alphas[i], sampled[i]->map));
        }
    }

    Tensor loss = mean_scalars(&tape, losses);
    if (!penalties.empty()) {
        loss = add_scalars(&tape, loss, scale_scalar(&tape, mean_scalars(&tape, penalties), lambda));
    }
    return loss;
}

}  // namespace cqural
