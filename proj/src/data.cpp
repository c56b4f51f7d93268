#include "cqural/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>

namespace cqural {

namespace {

std::uint32_t read_be32(std::span<const std::uint8_t> bytes, size_t offset, const char* what) {
    if (offset + 4 > bytes.size()) {
        throw FormatError(std::string("truncated ") + what + " at byte offset " + std::to_string(offset));
    }
    return (static_cast<std::uint32_t>(bytes[offset]) << 24) |
           (static_cast<std::uint32_t>(bytes[offset + 1]) << 16) |
           (static_cast<std::uint32_t>(bytes[offset + 2]) << 8) |
           static_cast<std::uint32_t>(bytes[offset + 3]);
}

void write_be32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v >> 24));
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v));
}

}  // namespace

std::vector<LabeledImage> parse_mnist_idx(std::span<const std::uint8_t> image_bytes,
                                          std::span<const std::uint8_t> label_bytes) {
    const std::uint32_t image_magic = read_be32(image_bytes, 0, "image header");
    if (image_magic != 2051) {
        throw FormatError("bad image magic " + std::to_string(image_magic) +
                          " at byte offset 0 (expected 2051)");
    }
    const std::uint32_t count = read_be32(image_bytes, 4, "image header");
    const std::uint32_t rows = read_be32(image_bytes, 8, "image header");
    const std::uint32_t cols = read_be32(image_bytes, 12, "image header");
    const size_t payload = static_cast<size_t>(count) * rows * cols;
    if (image_bytes.size() != 16 + payload) {
        throw FormatError("image payload truncated: have " + std::to_string(image_bytes.size() - 16) +
                          " bytes from offset 16, need " + std::to_string(payload));
    }

    const std::uint32_t label_magic = read_be32(label_bytes, 0, "label header");
    if (label_magic != 2049) {
        throw FormatError("bad label magic " + std::to_string(label_magic) +
                          " at byte offset 0 (expected 2049)");
    }
    const std::uint32_t label_count = read_be32(label_bytes, 4, "label header");
    if (label_count != count) {
        throw FormatError("image count " + std::to_string(count) + " != label count " +
                          std::to_string(label_count));
    }
    if (label_bytes.size() != 8 + static_cast<size_t>(count)) {
        throw FormatError("label payload truncated at byte offset " + std::to_string(label_bytes.size()));
    }

    std::vector<LabeledImage> out;
    out.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        LabeledImage img;
        img.channels = 1;
        img.height = static_cast<int>(rows);
        img.width = static_cast<int>(cols);
        img.label = static_cast<int>(label_bytes[8 + i]);
        img.source_index = static_cast<long>(i);
        img.pixels.resize(static_cast<size_t>(rows) * cols);
        const std::uint8_t* src = image_bytes.data() + 16 + static_cast<size_t>(i) * rows * cols;
        for (size_t p = 0; p < img.pixels.size(); ++p) img.pixels[p] = static_cast<double>(src[p]);
        out.push_back(std::move(img));
    }
    return out;
}

std::vector<LabeledImage> parse_cifar10_bin(std::span<const std::uint8_t> bytes) {
    constexpr size_t record = 3073;  // 1 label byte + 3 x 1024 pixel bytes
    if (bytes.empty() || bytes.size() % record != 0) {
        throw FormatError("CIFAR-10 stream length " + std::to_string(bytes.size()) +
                          " is not a positive multiple of 3073");
    }
    const size_t n = bytes.size() / record;
    std::vector<LabeledImage> out;
    out.reserve(n);
    for (size_t i = 0; i < n; ++i) {
        const std::uint8_t* rec = bytes.data() + i * record;
        if (rec[0] > 9) {
            throw FormatError("CIFAR-10 label byte " + std::to_string(int(rec[0])) +
                              " out of range at record " + std::to_string(i));
        }
        LabeledImage img;
        img.channels = 3;
        img.height = 32;
        img.width = 32;
        img.label = static_cast<int>(rec[0]);
        img.source_index = static_cast<long>(i);
        img.pixels.resize(3 * 32 * 32);
        for (size_t p = 0; p < 3 * 32 * 32; ++p) img.pixels[p] = static_cast<double>(rec[1 + p]);
        out.push_back(std::move(img));
    }
    return out;
}

std::vector<std::uint8_t> write_mnist_idx_images(const std::vector<LabeledImage>& images) {
    if (images.empty()) throw UsageError("write_mnist_idx_images: empty image list");
    const int rows = images[0].height, cols = images[0].width;
    std::vector<std::uint8_t> out;
    out.reserve(16 + images.size() * static_cast<size_t>(rows) * cols);
    write_be32(out, 2051);
    write_be32(out, static_cast<std::uint32_t>(images.size()));
    write_be32(out, static_cast<std::uint32_t>(rows));
    write_be32(out, static_cast<std::uint32_t>(cols));
    for (const LabeledImage& img : images) {
        if (img.channels != 1 || img.height != rows || img.width != cols) {
            throw UsageError("write_mnist_idx_images: inconsistent image shape");
        }
        for (double v : img.pixels) {
            const double r = std::clamp(std::round(v), 0.0, 255.0);
            out.push_back(static_cast<std::uint8_t>(r));
        }
    }
    return out;
}

std::vector<std::uint8_t> write_mnist_idx_labels(const std::vector<LabeledImage>& images) {
    if (images.empty()) throw UsageError("write_mnist_idx_labels: empty image list");
    std::vector<std::uint8_t> out;
    out.reserve(8 + images.size());
    write_be32(out, 2049);
    write_be32(out, static_cast<std::uint32_t>(images.size()));
    for (const LabeledImage& img : images) out.push_back(static_cast<std::uint8_t>(img.label));
    return out;
}

std::vector<std::uint8_t> write_cifar10_bin(const std::vector<LabeledImage>& images) {
    std::vector<std::uint8_t> out;
    out.reserve(images.size() * 3073);
    for (const LabeledImage& img : images) {
        if (img.channels != 3 || img.height != 32 || img.width != 32) {
            throw UsageError("write_cifar10_bin: images must be 3x32x32");
        }
        out.push_back(static_cast<std::uint8_t>(img.label));
        for (double v : img.pixels) {
            const double r = std::clamp(std::round(v), 0.0, 255.0);
            out.push_back(static_cast<std::uint8_t>(r));
        }
    }
    return out;
}

TaskDataset build_task(const std::vector<LabeledImage>& full, const DatasetSpec& spec, std::mt19937& rng) {
    const int per_class = spec.samples_per_class;
    const int train_per_class = static_cast<int>(std::llround(per_class * spec.train_fraction));
    const int test_per_class = per_class - train_per_class;
    const int train_total = 2 * train_per_class;
    const int pool_total = static_cast<int>(std::ceil(spec.injection_fraction * train_total));
    const int pool_a = (pool_total + 1) / 2;
    const int pool_b = pool_total / 2;
    const int pool_cls_a = spec.pool_class_a >= 0 ? spec.pool_class_a : spec.class_a;
    const int pool_cls_b = spec.pool_class_b >= 0 ? spec.pool_class_b : spec.class_b;

    // One shuffled index list and draw cursor per class id; sequential draws
    // keep every partition disjoint by construction.
    std::map<int, std::vector<size_t>> indices;
    for (size_t i = 0; i < full.size(); ++i) indices[full[i].label].push_back(i);
    for (auto& [cls, idx] : indices) std::shuffle(idx.begin(), idx.end(), rng);
    std::map<int, size_t> cursor;

    const auto need = [&](int cls) -> int {
        int n = 0;
        if (cls == spec.class_a) n += per_class;
        if (cls == spec.class_b) n += per_class;
        if (cls == pool_cls_a) n += pool_a;
        if (cls == pool_cls_b) n += pool_b;
        return n;
    };
    for (int cls : {spec.class_a, spec.class_b, pool_cls_a, pool_cls_b}) {
        const int available = indices.count(cls) ? static_cast<int>(indices[cls].size()) : 0;
        if (available < need(cls)) {
            throw DataError("class " + std::to_string(cls) + " needs " + std::to_string(need(cls)) +
                            " examples, only " + std::to_string(available) + " available");
        }
    }

    const auto take = [&](int cls, int count, int new_label, std::vector<LabeledImage>& dst) {
        auto& idx = indices[cls];
        size_t& at = cursor[cls];
        for (int i = 0; i < count; ++i, ++at) {
            LabeledImage img = full[idx[at]];
            img.source_index = static_cast<long>(idx[at]);
            img.label = new_label;
            dst.push_back(std::move(img));
        }
    };

    TaskDataset task;
    task.spec = spec;
    // Interleave classes so unshuffled consumers do not see class blocks.
    std::vector<LabeledImage> train_a, train_b;
    take(spec.class_a, train_per_class, 0, train_a);
    take(spec.class_b, train_per_class, 1, train_b);
    for (int i = 0; i < train_per_class; ++i) {
        task.train.push_back(std::move(train_a[static_cast<size_t>(i)]));
        task.train.push_back(std::move(train_b[static_cast<size_t>(i)]));
    }
    take(spec.class_a, test_per_class, 0, task.test);
    take(spec.class_b, test_per_class, 1, task.test);
    take(pool_cls_a, pool_a, 0, task.injection_pool);
    take(pool_cls_b, pool_b, 1, task.injection_pool);
    return task;
}

ChannelStats compute_channel_stats(const std::vector<LabeledImage>& train) {
    if (train.empty()) throw DataError("compute_channel_stats: empty train partition");
    const int channels = train[0].channels;
    ChannelStats stats;
    stats.mean.assign(static_cast<size_t>(channels), 0.0);
    stats.stddev.assign(static_cast<size_t>(channels), 0.0);

    std::vector<long> counts(static_cast<size_t>(channels), 0);
    for (const LabeledImage& img : train) {
        const int plane = img.height * img.width;
        for (int c = 0; c < channels; ++c) {
            for (int p = 0; p < plane; ++p) stats.mean[static_cast<size_t>(c)] += img.pixels[static_cast<size_t>(c * plane + p)];
            counts[static_cast<size_t>(c)] += plane;
        }
    }
    for (int c = 0; c < channels; ++c) stats.mean[static_cast<size_t>(c)] /= static_cast<double>(counts[static_cast<size_t>(c)]);

    for (const LabeledImage& img : train) {
        const int plane = img.height * img.width;
        for (int c = 0; c < channels; ++c) {
            for (int p = 0; p < plane; ++p) {
                const double d = img.pixels[static_cast<size_t>(c * plane + p)] - stats.mean[static_cast<size_t>(c)];
                stats.stddev[static_cast<size_t>(c)] += d * d;
            }
        }
    }
    for (int c = 0; c < channels; ++c) {
        stats.stddev[static_cast<size_t>(c)] =
            std::sqrt(stats.stddev[static_cast<size_t>(c)] / static_cast<double>(counts[static_cast<size_t>(c)]));
    }
    return stats;
}

void apply_standardize(std::vector<LabeledImage>& images, const ChannelStats& stats) {
    for (LabeledImage& img : images) {
        const int plane = img.height * img.width;
        for (int c = 0; c < img.channels; ++c) {
            const double mean = stats.mean.at(static_cast<size_t>(c));
            const double denom = stats.stddev.at(static_cast<size_t>(c)) + 1e-8;
            for (int p = 0; p < plane; ++p) {
                auto& v = img.pixels[static_cast<size_t>(c * plane + p)];
                v = (v - mean) / denom;
            }
        }
    }
}

ChannelStats standardize(TaskDataset& task) {
    ChannelStats stats = compute_channel_stats(task.train);
    apply_standardize(task.train, stats);
    apply_standardize(task.test, stats);
    apply_standardize(task.injection_pool, stats);
    return stats;
}

TaskDataset synthetic_task(const SyntheticSpec& spec) {
    if (spec.margin <= 0.0) throw ParameterError("synthetic_task: margin must be positive");
    if (spec.margin > 150.0) {
        throw ParameterError("synthetic_task: margin above 150 exceeds the 8-bit brightness budget");
    }
    std::mt19937 rng(spec.seed);
    std::uniform_real_distribution<double> noise(0.0, 40.0);

    const int pool_need = static_cast<int>(std::ceil(spec.injection_fraction * 2.0 *
                                                     std::llround(spec.per_class * 0.8)));
    const int gen_per_class = spec.per_class + (pool_need + 1) / 2 + 1;

    const int bh = std::max(2, spec.height / 4);
    const int bw = std::max(2, spec.width / 4);
    // The class blob jitters inside its quadrant and two half-brightness
    // distractor blobs land anywhere, so held-out samples occupy genuinely
    // unseen configurations while the margin-bright class blob keeps the
    // classes linearly separable (class-0 mass upper-left, class-1
    // lower-right, distractors too dim to flip the balance).
    const auto render = [&](int label, long source_index) {
        LabeledImage img;
        img.channels = 1;
        img.height = spec.height;
        img.width = spec.width;
        img.label = label;
        img.source_index = source_index;
        img.pixels.resize(static_cast<size_t>(spec.height) * spec.width);
        for (auto& p : img.pixels) p = noise(rng);

        const auto paint = [&](int oy, int ox, double level) {
            for (int y = 0; y < bh; ++y) {
                for (int x = 0; x < bw; ++x) {
                    auto& p = img.at(0, oy + y, ox + x);
                    p = std::min(255.0, std::max(p, level + noise(rng)));
                }
            }
        };

        const int ymax = std::max(0, spec.height / 2 - bh);
        const int xmax = std::max(0, spec.width / 2 - bw);
        std::uniform_int_distribution<int> jy(0, ymax), jx(0, xmax);
        const int oy = label == 0 ? jy(rng) : spec.height - bh - jy(rng);
        const int ox = label == 0 ? jx(rng) : spec.width - bw - jx(rng);
        paint(oy, ox, spec.margin);

        std::uniform_int_distribution<int> dy(0, std::max(0, spec.height - bh));
        std::uniform_int_distribution<int> dx(0, std::max(0, spec.width - bw));
        for (int i = 0; i < 2; ++i) paint(dy(rng), dx(rng), spec.margin / 2.0);

        // Enforce linear separability at the stated margin under the fixed
        // witness functional f = sum(lower rows) - sum(upper rows): nudge the
        // class blob up, then dim opposing-half pixels if the blob clamps.
        const int half_rows = spec.height / 2;
        const auto functional = [&]() {
            double f = 0.0;
            for (int y = 0; y < spec.height; ++y) {
                for (int x = 0; x < spec.width; ++x) {
                    f += (y >= half_rows ? 1.0 : -1.0) * img.at(0, y, x);
                }
            }
            return f;
        };
        const double sign = label == 1 ? 1.0 : -1.0;
        if (sign * functional() < spec.margin) {
            const double deficit = spec.margin - sign * functional();
            const double per_blob = deficit / (bh * bw);
            for (int y = 0; y < bh; ++y) {
                for (int x = 0; x < bw; ++x) {
                    auto& p = img.at(0, oy + y, ox + x);
                    p = std::min(255.0, p + per_blob);
                }
            }
        }
        for (int pass = 0; pass < 16 && sign * functional() < spec.margin; ++pass) {
            const double deficit = spec.margin - sign * functional();
            const double per_pixel = deficit / (half_rows * spec.width);
            const int from = label == 1 ? 0 : half_rows;
            for (int y = from; y < from + half_rows; ++y) {
                for (int x = 0; x < spec.width; ++x) {
                    auto& p = img.at(0, y, x);
                    p = std::max(0.0, p - per_pixel);
                }
            }
        }
        return img;
    };

    std::vector<LabeledImage> full;
    full.reserve(static_cast<size_t>(2 * gen_per_class));
    for (int i = 0; i < gen_per_class; ++i) {
        full.push_back(render(0, static_cast<long>(full.size())));
        full.push_back(render(1, static_cast<long>(full.size())));
    }

    DatasetSpec ds;
    ds.dataset = "synthetic";
    ds.class_a = 0;
    ds.class_b = 1;
    ds.samples_per_class = spec.per_class;
    ds.injection_fraction = spec.injection_fraction;
    ds.seed = spec.seed;
    return build_task(full, ds, rng);
}

std::vector<std::uint8_t> read_binary_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open file: " + path);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return bytes;
}

void write_binary_file_atomic(const std::string& path, std::span<const std::uint8_t> bytes) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw DataError("cannot open file for writing: " + tmp);
        out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
        if (!out) throw DataError("short write to " + tmp);
    }
    std::filesystem::rename(tmp, path);
}

}  // namespace cqural
