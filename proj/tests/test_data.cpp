#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <random>
#include <set>

#include "cqural/data.hpp"
#include "cqural/models.hpp"

using namespace cqural;

namespace {

std::vector<LabeledImage> random_images(int count, int h, int w, int classes, std::mt19937& rng) {
    std::uniform_int_distribution<int> pix(0, 255);
    std::vector<LabeledImage> out;
    for (int i = 0; i < count; ++i) {
        LabeledImage img;
        img.channels = 1;
        img.height = h;
        img.width = w;
        img.label = i % classes;
        img.source_index = i;
        img.pixels.resize(static_cast<size_t>(h) * w);
        for (auto& p : img.pixels) p = pix(rng);
        out.push_back(std::move(img));
    }
    return out;
}

std::set<long> source_set(const std::vector<LabeledImage>& images) {
    std::set<long> out;
    for (const auto& img : images) out.insert(img.source_index);
    return out;
}

}  // namespace

TEST_CASE("mnist idx: write-parse round trip is bit exact") {
    std::mt19937 rng(1);
    auto images = random_images(23, 9, 7, 10, rng);
    const auto image_bytes = write_mnist_idx_images(images);
    const auto label_bytes = write_mnist_idx_labels(images);

    // Header starts 00 00 08 03 (magic 2051, unsigned byte, 3 dims).
    CHECK(image_bytes[0] == 0);
    CHECK(image_bytes[1] == 0);
    CHECK(image_bytes[2] == 8);
    CHECK(image_bytes[3] == 3);

    const auto parsed = parse_mnist_idx(image_bytes, label_bytes);
    REQUIRE(parsed.size() == images.size());
    for (size_t i = 0; i < parsed.size(); ++i) {
        CHECK(parsed[i].pixels == images[i].pixels);
        CHECK(parsed[i].label == images[i].label);
        CHECK(parsed[i].channels == 1);
        CHECK(parsed[i].height == 9);
        CHECK(parsed[i].width == 7);
        CHECK(parsed[i].source_index == static_cast<long>(i));
    }
}

TEST_CASE("mnist idx: format errors name the problem") {
    std::mt19937 rng(2);
    auto images = random_images(3, 4, 4, 2, rng);
    auto image_bytes = write_mnist_idx_images(images);
    auto label_bytes = write_mnist_idx_labels(images);

    auto bad_magic = image_bytes;
    bad_magic[3] = 2;  // magic 2050
    CHECK_THROWS_WITH_AS(parse_mnist_idx(bad_magic, label_bytes), doctest::Contains("2050"),
                         FormatError);

    auto bad_label_magic = label_bytes;
    bad_label_magic[3] = 3;
    CHECK_THROWS_AS(parse_mnist_idx(image_bytes, bad_label_magic), FormatError);

    auto truncated = image_bytes;
    truncated.pop_back();
    CHECK_THROWS_WITH_AS(parse_mnist_idx(truncated, label_bytes), doctest::Contains("truncated"),
                         FormatError);

    auto extra = images;
    extra.pop_back();
    const auto fewer_labels = write_mnist_idx_labels(extra);
    CHECK_THROWS_WITH_AS(parse_mnist_idx(image_bytes, fewer_labels), doctest::Contains("count"),
                         FormatError);
}

TEST_CASE("cifar10: fixture round trip, label range, truncation") {
    LabeledImage img;
    img.channels = 3;
    img.height = 32;
    img.width = 32;
    img.label = 7;
    img.source_index = 0;
    img.pixels.assign(3 * 32 * 32, 128.0);
    const auto bytes = write_cifar10_bin({img});
    REQUIRE(bytes.size() == 3073);

    const auto parsed = parse_cifar10_bin(bytes);
    REQUIRE(parsed.size() == 1);
    CHECK(parsed[0].label == 7);
    CHECK(parsed[0].pixels == img.pixels);

    auto truncated = bytes;
    truncated.pop_back();
    CHECK_THROWS_WITH_AS(parse_cifar10_bin(truncated), doctest::Contains("3073"), FormatError);

    auto bad_label = bytes;
    bad_label[0] = 11;
    CHECK_THROWS_WITH_AS(parse_cifar10_bin(bad_label), doctest::Contains("record 0"), FormatError);

    // Multi-record stream parses record-by-record.
    std::mt19937 rng(6);
    std::vector<LabeledImage> imgs;
    for (int i = 0; i < 5; ++i) {
        LabeledImage r = img;
        r.label = i;
        std::uniform_int_distribution<int> pix(0, 255);
        for (auto& p : r.pixels) p = pix(rng);
        imgs.push_back(std::move(r));
    }
    const auto multi = write_cifar10_bin(imgs);
    const auto parsed_multi = parse_cifar10_bin(multi);
    REQUIRE(parsed_multi.size() == 5);
    for (size_t i = 0; i < 5; ++i) {
        CHECK(parsed_multi[i].pixels == imgs[i].pixels);
        CHECK(parsed_multi[i].label == static_cast<int>(i));
    }
}

TEST_CASE("build_task: paper regime counts, stratification, disjoint pool") {
    std::mt19937 data_rng(3);
    auto full = random_images(600, 6, 6, 2, data_rng);

    DatasetSpec spec;
    spec.samples_per_class = 100;
    spec.seed = 11;
    std::mt19937 rng(spec.seed);
    const TaskDataset task = build_task(full, spec, rng);

    CHECK(task.train.size() == 160);
    CHECK(task.test.size() == 40);
    CHECK(task.injection_pool.size() == 80);

    const auto count_label = [](const std::vector<LabeledImage>& v, int label) {
        return std::count_if(v.begin(), v.end(), [&](const auto& i) { return i.label == label; });
    };
    CHECK(count_label(task.train, 0) == 80);
    CHECK(count_label(task.train, 1) == 80);
    CHECK(count_label(task.test, 0) == 20);
    CHECK(count_label(task.test, 1) == 20);
    CHECK(std::abs(count_label(task.injection_pool, 0) - count_label(task.injection_pool, 1)) <= 1);

    const auto train_src = source_set(task.train);
    const auto test_src = source_set(task.test);
    const auto pool_src = source_set(task.injection_pool);
    CHECK(train_src.size() == task.train.size());
    for (long s : test_src) CHECK_FALSE(train_src.count(s));
    for (long s : pool_src) {
        CHECK_FALSE(train_src.count(s));
        CHECK_FALSE(test_src.count(s));
    }

    for (const auto& img : task.train) CHECK((img.label == 0 || img.label == 1));
}

TEST_CASE("build_task: determinism and seed sensitivity") {
    std::mt19937 data_rng(4);
    auto full = random_images(600, 5, 5, 2, data_rng);
    DatasetSpec spec;
    spec.samples_per_class = 50;

    std::mt19937 r1(9), r2(9), r3(10);
    const TaskDataset a = build_task(full, spec, r1);
    const TaskDataset b = build_task(full, spec, r2);
    const TaskDataset c = build_task(full, spec, r3);

    REQUIRE(a.train.size() == b.train.size());
    bool identical = true;
    for (size_t i = 0; i < a.train.size(); ++i) {
        identical &= a.train[i].source_index == b.train[i].source_index;
        identical &= a.train[i].pixels == b.train[i].pixels;
    }
    CHECK(identical);

    bool differs = false;
    for (size_t i = 0; i < a.train.size(); ++i) {
        differs |= a.train[i].source_index != c.train[i].source_index;
    }
    CHECK(differs);
    // Structural invariants hold for the new seed as well.
    CHECK(c.train.size() == 80);
    CHECK(c.test.size() == 20);
}

TEST_CASE("build_task: insufficient data reports required vs available") {
    std::mt19937 data_rng(5);
    auto full = random_images(60, 4, 4, 2, data_rng);  // 30 per class
    DatasetSpec spec;
    spec.samples_per_class = 100;
    std::mt19937 rng(1);
    CHECK_THROWS_WITH_AS(build_task(full, spec, rng), doctest::Contains("available"), DataError);
}

TEST_CASE("build_task: cross-class injection pool draws the configured classes") {
    std::mt19937 data_rng(8);
    auto full = random_images(800, 4, 4, 4, data_rng);  // labels 0..3
    DatasetSpec spec;
    spec.samples_per_class = 40;
    spec.pool_class_a = 2;
    spec.pool_class_b = 3;
    std::mt19937 rng(2);
    const TaskDataset task = build_task(full, spec, rng);

    // Pool entries are relabeled to the binary task but come from classes 2/3.
    for (const auto& img : task.injection_pool) {
        CHECK((img.label == 0 || img.label == 1));
        CHECK(full[static_cast<size_t>(img.source_index)].label >= 2);
    }
    const auto train_src = source_set(task.train);
    for (const auto& img : task.injection_pool) CHECK_FALSE(train_src.count(img.source_index));
}

TEST_CASE("standardize: train stats, zero-variance guard, applied to test") {
    std::vector<LabeledImage> train;
    for (int i = 0; i < 4; ++i) {
        LabeledImage img;
        img.channels = 2;
        img.height = 2;
        img.width = 2;
        img.label = i % 2;
        img.source_index = i;
        // Channel 0 is constant 9; channel 1 varies.
        img.pixels = {9, 9, 9, 9, double(i), double(i + 1), double(2 * i), double(3 * i)};
        train.push_back(img);
    }
    TaskDataset task;
    task.train = train;
    task.test = {train[0]};
    const ChannelStats stats = standardize(task);

    for (const auto& img : task.train) {
        for (int p = 0; p < 4; ++p) CHECK(img.pixels[static_cast<size_t>(p)] == 0.0);  // constant channel
    }
    // Recompute channel-1 moments of the transformed train set directly.
    double mean = 0.0, var = 0.0;
    for (const auto& img : task.train) {
        for (int p = 4; p < 8; ++p) mean += img.pixels[static_cast<size_t>(p)];
    }
    mean /= 16.0;
    for (const auto& img : task.train) {
        for (int p = 4; p < 8; ++p) var += std::pow(img.pixels[static_cast<size_t>(p)] - mean, 2);
    }
    var /= 16.0;
    CHECK(std::abs(mean) < 1e-6);
    CHECK(std::abs(std::sqrt(var) - 1.0) < 1e-3);

    // Test partition was transformed with train statistics.
    for (int p = 4; p < 8; ++p) {
        const double expected = (train[0].pixels[static_cast<size_t>(p)] - stats.mean[1]) /
                                (stats.stddev[1] + 1e-8);
        CHECK(task.test[0].pixels[static_cast<size_t>(p)] == doctest::Approx(expected));
    }
}

TEST_CASE("synthetic_task: determinism, shape, linear separability via the svm oracle") {
    SyntheticSpec spec;
    spec.per_class = 40;
    spec.seed = 77;
    const TaskDataset a = synthetic_task(spec);
    const TaskDataset b = synthetic_task(spec);

    REQUIRE(a.train.size() == b.train.size());
    for (size_t i = 0; i < a.train.size(); ++i) CHECK(a.train[i].pixels == b.train[i].pixels);

    CHECK(a.train[0].channels == 1);
    CHECK(a.train[0].height == 16);
    CHECK(a.train[0].width == 16);
    CHECK(a.train.size() == 64);  // 40 per class, 80:20
    CHECK(a.test.size() == 16);

    TaskDataset task = synthetic_task(spec);
    standardize(task);
    SvmModel svm(task.train, 0.01, 20, 5);
    int hits = 0;
    for (const auto& img : task.train) {
        if (svm.predict(img).label == img.label) ++hits;
    }
    CHECK(hits == static_cast<int>(task.train.size()));

    CHECK_THROWS_AS(synthetic_task(SyntheticSpec{16, 16, 0.0, 10, 0.5, 1}), ParameterError);
}
