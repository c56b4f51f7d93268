#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "cqural/config.hpp"
#include "cqural/metrics.hpp"
#include "cqural/report.hpp"

using namespace cqural;

TEST_CASE("compute_metrics: perfect, hand-checked confusion, never-predicted class") {
    const MetricsRow perfect = compute_metrics({0, 1, 0, 1}, {0, 1, 0, 1});
    CHECK(perfect.accuracy == doctest::Approx(1.0));
    CHECK(perfect.precision0 == doctest::Approx(1.0));
    CHECK(perfect.recall1 == doctest::Approx(1.0));

    // Confusion [[3,1],[2,4]] with rows as truth.
    std::vector<int> truths, preds;
    for (int i = 0; i < 3; ++i) { truths.push_back(0); preds.push_back(0); }
    truths.push_back(0); preds.push_back(1);
    for (int i = 0; i < 2; ++i) { truths.push_back(1); preds.push_back(0); }
    for (int i = 0; i < 4; ++i) { truths.push_back(1); preds.push_back(1); }
    const MetricsRow m = compute_metrics(preds, truths);
    CHECK(m.confusion[0][0] == 3);
    CHECK(m.confusion[0][1] == 1);
    CHECK(m.confusion[1][0] == 2);
    CHECK(m.confusion[1][1] == 4);
    CHECK(m.precision0 == doctest::Approx(0.6));
    CHECK(m.recall0 == doctest::Approx(0.75));
    CHECK(m.accuracy == doctest::Approx(0.7));
    CHECK(m.total() == 10);

    // Model that only says class 1: precision 0 for class 0 by convention.
    const MetricsRow onesided = compute_metrics({1, 1, 1, 1}, {0, 0, 1, 1});
    CHECK(onesided.precision0 == 0.0);
    CHECK(onesided.recall0 == 0.0);

    CHECK_THROWS_AS(compute_metrics({0, 1}, {0}), UsageError);
    CHECK_THROWS_AS(compute_metrics({}, {}), UsageError);
}

TEST_CASE("roc_points: separating scores, sentinels, monotonicity, random AUC") {
    const RocCurve sep = roc_points({0.9, 0.8, 0.2, 0.1}, {1, 1, 0, 0});
    CHECK(sep.auc == doctest::Approx(1.0));
    bool passes_corner = false;
    for (const auto& [fpr, tpr] : sep.points) {
        if (fpr == 0.0 && tpr == 1.0) passes_corner = true;
    }
    CHECK(passes_corner);
    CHECK(sep.points.front() == std::make_pair(0.0, 0.0));
    CHECK(sep.points.back() == std::make_pair(1.0, 1.0));
    for (size_t i = 1; i < sep.points.size(); ++i) {
        CHECK(sep.points[i].first >= sep.points[i - 1].first);
        CHECK(sep.points[i].second >= sep.points[i - 1].second);
    }

    std::mt19937 rng(7);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    std::vector<double> scores(2000);
    std::vector<int> truths(2000);
    for (int i = 0; i < 2000; ++i) {
        scores[static_cast<size_t>(i)] = uni(rng);
        truths[static_cast<size_t>(i)] = uni(rng) < 0.5 ? 0 : 1;
    }
    const RocCurve random_curve = roc_points(scores, truths);
    CHECK(std::abs(random_curve.auc - 0.5) < 0.05);

    CHECK_THROWS_AS(roc_points({0.5, 0.6}, {1, 1}), UsageError);
}

TEST_CASE("emit_csv: quoting, header-only output, ragged rejection") {
    const std::string out = emit_csv({"name", "value"}, {{"a,b", "1"}});
    CHECK(out == "name,value\n\"a,b\",1\n");

    CHECK(emit_csv({"x"}, {}) == "x\n");
    CHECK(emit_csv({"q"}, {{"say \"hi\""}}) == "q\n\"say \"\"hi\"\"\"\n");
    CHECK_THROWS_AS(emit_csv({"a", "b"}, {{"only-one"}}), UsageError);
    CHECK(emit_csv({"n"}, {{"line\nbreak"}}) == "n\n\"line\nbreak\"\n");
}

TEST_CASE("csv writer round-trips 100 random rows through the bundled reader") {
    std::mt19937 rng(13);
    const std::string alphabet = "abc,\"\n xyz019";
    std::uniform_int_distribution<int> len(0, 12);
    std::uniform_int_distribution<size_t> pick(0, alphabet.size() - 1);

    std::vector<std::vector<std::string>> rows;
    for (int r = 0; r < 100; ++r) {
        std::vector<std::string> row;
        for (int c = 0; c < 3; ++c) {
            std::string field;
            const int n = len(rng);
            for (int i = 0; i < n; ++i) field += alphabet[pick(rng)];
            row.push_back(std::move(field));
        }
        rows.push_back(std::move(row));
    }
    const std::string text = emit_csv({"c0", "c1", "c2"}, rows);
    const auto parsed = parse_csv(text);
    REQUIRE(parsed.size() == rows.size() + 1);
    CHECK(parsed[0] == std::vector<std::string>{"c0", "c1", "c2"});
    for (size_t r = 0; r < rows.size(); ++r) CHECK(parsed[r + 1] == rows[r]);
}

TEST_CASE("emit_svg_plot: one polyline per series, xml-clean, degenerate handling") {
    PlotSeries a{"loss<1>", {1, 2, 3}, {0.8, 0.6, 0.5}};
    PlotSeries b{"val & test", {1, 2, 3}, {0.9, 0.7, 0.6}};
    const std::string svg = emit_svg_plot({a, b}, 640, 400, "curves");

    size_t count = 0, at = 0;
    while ((at = svg.find("<polyline", at)) != std::string::npos) {
        ++count;
        ++at;
    }
    CHECK(count == 2);
    CHECK(xml_well_formed(svg));
    CHECK(svg.find("loss&lt;1&gt;") != std::string::npos);
    CHECK(svg.find("val &amp; test") != std::string::npos);

    PlotSeries point{"single", {2.0}, {1.5}};
    const std::string dot = emit_svg_plot({point}, 320, 200, "one point");
    CHECK(dot.find("<circle") != std::string::npos);
    CHECK(xml_well_formed(dot));

    PlotSeries bad{"nan", {1.0}, {std::nan("")}};
    CHECK_THROWS_AS(emit_svg_plot({bad}, 320, 200, "bad"), DataError);
    CHECK_THROWS_AS(emit_svg_plot({}, 320, 200, "none"), UsageError);
}

TEST_CASE("xml_well_formed rejects malformed documents") {
    CHECK(xml_well_formed("<a><b x=\"1\"/></a>"));
    CHECK(xml_well_formed("<?xml version=\"1.0\"?>\n<r><c>text</c></r>"));
    CHECK_FALSE(xml_well_formed("<a><b></a></b>"));
    CHECK_FALSE(xml_well_formed("<a>"));
    CHECK_FALSE(xml_well_formed("<a attr=unquoted></a>"));
    CHECK_FALSE(xml_well_formed("stray > here <a></a>"));
}

TEST_CASE("emit_ppm_overlay: exact header, alpha extremes, dimension check") {
    LabeledImage img;
    img.channels = 1;
    img.height = 2;
    img.width = 3;
    img.label = 0;
    img.pixels = {0, 51, 102, 153, 204, 255};

    const std::vector<double> flat(6, 0.0);
    const auto plain = emit_ppm_overlay(img, flat, 0.0);
    const std::string header = "P6\n3 2\n255\n";
    REQUIRE(plain.size() == header.size() + 18);
    CHECK(std::equal(header.begin(), header.end(), plain.begin()));

    // alpha = 0 leaves the grayscale untouched (rescaled to full range here).
    for (int p = 0; p < 6; ++p) {
        const std::uint8_t g = plain[header.size() + static_cast<size_t>(p) * 3];
        CHECK(static_cast<int>(g) == static_cast<int>(img.pixels[static_cast<size_t>(p)]));
        CHECK(plain[header.size() + static_cast<size_t>(p) * 3 + 1] == g);
        CHECK(plain[header.size() + static_cast<size_t>(p) * 3 + 2] == g);
    }

    // Full saliency at alpha = 1 paints the pure heat ramp (red-yellow).
    const std::vector<double> hot(6, 1.0);
    const auto heat = emit_ppm_overlay(img, hot, 1.0);
    for (int p = 0; p < 6; ++p) {
        CHECK(heat[header.size() + static_cast<size_t>(p) * 3] == 255);
        CHECK(heat[header.size() + static_cast<size_t>(p) * 3 + 1] == 255);
        CHECK(heat[header.size() + static_cast<size_t>(p) * 3 + 2] == 0);
    }

    CHECK_THROWS_AS(emit_ppm_overlay(img, {1.0}, 0.5), DimensionError);
    CHECK_THROWS_AS(emit_ppm_overlay(img, flat, 1.5), ParameterError);
}

TEST_CASE("experiment config: defaults, echo round trip, strict validation") {
    const ExperimentConfig defaults = parse_experiment_config("{}");
    CHECK(defaults.dataset == "synthetic");
    CHECK(defaults.model == "cqural");
    CHECK(defaults.epochs == 30);
    CHECK(defaults.lr == doctest::Approx(0.001));
    CHECK(defaults.injection_epoch == 29);
    CHECK(defaults.injection_ratio == doctest::Approx(0.5));
    CHECK(defaults.seeds.size() == 5);
    CHECK(defaults.checkpoint_stride == 5);
    CHECK(defaults.samples_per_class == 100);
    CHECK(defaults.replay.confidence_threshold == doctest::Approx(0.90));

    const std::string echoed = echo_experiment_config(defaults);
    const ExperimentConfig again = parse_experiment_config(echoed);
    CHECK(echo_experiment_config(again) == echoed);

    CHECK_THROWS_AS(parse_experiment_config("{\"no_such_key\": 1}"), ConfigError);
    CHECK_THROWS_AS(parse_experiment_config("{\"epochs\": 0}"), ConfigError);
    CHECK_THROWS_AS(parse_experiment_config("{\"model\": \"perceptron\"}"), ConfigError);
    CHECK_THROWS_AS(parse_experiment_config("{\"epochs\": 10, \"injection_epoch\": 11}"), ConfigError);
    CHECK_THROWS_AS(parse_experiment_config("{\"replay\": {\"mystery\": true}}"), ConfigError);
    CHECK_THROWS_AS(parse_experiment_config("{\"dataset\": \"mnist\"}"), ConfigError);  // missing paths
    CHECK_THROWS_AS(parse_experiment_config("not json at all"), ConfigError);
    CHECK_THROWS_AS(parse_experiment_config("{\"class_pair\": [1, 1]}"), ConfigError);
    CHECK_THROWS_AS(parse_experiment_config("{\"seeds\": []}"), ConfigError);
}
