#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "cqural/errors.hpp"

namespace cqural {

struct LabeledImage {
    int channels = 0;
    int height = 0;
    int width = 0;
    std::vector<double> pixels;  // C x H x W, row-major
    int label = 0;
    long source_index = -1;  // position in the originating dataset

    int pixel_count() const { return channels * height * width; }
    double& at(int c, int y, int x) { return pixels[static_cast<size_t>((c * height + y) * width + x)]; }
    double at(int c, int y, int x) const { return pixels[static_cast<size_t>((c * height + y) * width + x)]; }
};

struct DatasetSpec {
    std::string dataset = "synthetic";
    int class_a = 0;
    int class_b = 1;
    int samples_per_class = 100;
    double train_fraction = 0.8;      // 80:20 split
    double injection_fraction = 0.5;  // pool size = ceil(fraction * |train|)
    // Pool classes for cross-class injection experiments; negative means the
    // pool draws unseen samples of the task classes themselves.
    int pool_class_a = -1;
    int pool_class_b = -1;
    std::uint32_t seed = 0;
};

struct TaskDataset {
    std::vector<LabeledImage> train;
    std::vector<LabeledImage> test;
    std::vector<LabeledImage> injection_pool;
    DatasetSpec spec;
};

// MNIST IDX parsing: big-endian magic 2051 (images) / 2049 (labels).
// Raw pixel bytes are kept on the 0..255 scale.
std::vector<LabeledImage> parse_mnist_idx(std::span<const std::uint8_t> image_bytes,
                                          std::span<const std::uint8_t> label_bytes);

// CIFAR-10 binary: 3073-byte records, label byte then R,G,B planes.
std::vector<LabeledImage> parse_cifar10_bin(std::span<const std::uint8_t> bytes);

// Fixture writers emitting the same formats, for round-trip tests and for
// materializing generated corpora as real dataset files.
std::vector<std::uint8_t> write_mnist_idx_images(const std::vector<LabeledImage>& images);
std::vector<std::uint8_t> write_mnist_idx_labels(const std::vector<LabeledImage>& images);
std::vector<std::uint8_t> write_cifar10_bin(const std::vector<LabeledImage>& images);

// Restricts to the spec's class pair, draws samples_per_class per class,
// splits 80:20 stratified, reserves a disjoint balanced injection pool and
// relabels to {0, 1}. Deterministic given the generator state.
TaskDataset build_task(const std::vector<LabeledImage>& full, const DatasetSpec& spec, std::mt19937& rng);

struct ChannelStats {
    std::vector<double> mean;
    std::vector<double> stddev;
};

ChannelStats compute_channel_stats(const std::vector<LabeledImage>& train);
void apply_standardize(std::vector<LabeledImage>& images, const ChannelStats& stats);

// Train-partition stats applied to every partition: (x - mean) / (std + 1e-8).
ChannelStats standardize(TaskDataset& task);

struct SyntheticSpec {
    int height = 16;
    int width = 16;
    double margin = 120.0;  // blob brightness above the background band
    int per_class = 100;
    double injection_fraction = 0.5;
    std::uint32_t seed = 1;
};

// Two bright-blob classes at opposite corners with seeded noise; linearly
// separable in pixel space at the given margin.
TaskDataset synthetic_task(const SyntheticSpec& spec);

std::vector<std::uint8_t> read_binary_file(const std::string& path);
void write_binary_file_atomic(const std::string& path, std::span<const std::uint8_t> bytes);

}  // namespace cqural
