#include "cqural/metrics.hpp"

#include <algorithm>
#include <string>

namespace cqural {

MetricsRow compute_metrics(const std::vector<int>& predictions, const std::vector<int>& truths) {
    if (predictions.size() != truths.size()) {
        throw UsageError("compute_metrics: " + std::to_string(predictions.size()) + " predictions vs " +
                         std::to_string(truths.size()) + " truths");
    }
    if (predictions.empty()) throw UsageError("compute_metrics: empty input");

    MetricsRow row;
    for (size_t i = 0; i < predictions.size(); ++i) {
        const int t = truths[i], p = predictions[i];
        if (t < 0 || t > 1 || p < 0 || p > 1) {
            throw UsageError("compute_metrics: labels must be 0 or 1");
        }
        ++row.confusion[static_cast<size_t>(t)][static_cast<size_t>(p)];
    }

    const auto& cm = row.confusion;
    row.accuracy = static_cast<double>(cm[0][0] + cm[1][1]) / static_cast<double>(row.total());
    const long pred0 = cm[0][0] + cm[1][0], pred1 = cm[0][1] + cm[1][1];
    const long true0 = cm[0][0] + cm[0][1], true1 = cm[1][0] + cm[1][1];
    row.precision0 = pred0 > 0 ? static_cast<double>(cm[0][0]) / static_cast<double>(pred0) : 0.0;
    row.precision1 = pred1 > 0 ? static_cast<double>(cm[1][1]) / static_cast<double>(pred1) : 0.0;
    row.recall0 = true0 > 0 ? static_cast<double>(cm[0][0]) / static_cast<double>(true0) : 0.0;
    row.recall1 = true1 > 0 ? static_cast<double>(cm[1][1]) / static_cast<double>(true1) : 0.0;
    return row;
}

RocCurve roc_points(const std::vector<double>& scores, const std::vector<int>& truths) {
    if (scores.size() != truths.size() || scores.empty()) {
        throw UsageError("roc_points: scores and truths must be nonempty and equal length");
    }
    long positives = 0, negatives = 0;
    for (int t : truths) {
        if (t == 1) {
            ++positives;
        } else if (t == 0) {
            ++negatives;
        } else {
            throw UsageError("roc_points: labels must be 0 or 1");
        }
    }
    if (positives == 0 || negatives == 0) {
        throw UsageError("roc_points: both classes must be present");
    }

    std::vector<size_t> order(scores.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) { return scores[a] > scores[b]; });

    RocCurve curve;
    curve.points.emplace_back(0.0, 0.0);  // threshold +inf: nothing predicted positive
    long tp = 0, fp = 0;
    size_t i = 0;
    while (i < order.size()) {
        const double s = scores[order[i]];
        // Consume the whole tied group so each distinct score yields one point.
        while (i < order.size() && scores[order[i]] == s) {
            if (truths[order[i]] == 1) {
                ++tp;
            } else {
                ++fp;
            }
            ++i;
        }
        curve.points.emplace_back(static_cast<double>(fp) / static_cast<double>(negatives),
                                  static_cast<double>(tp) / static_cast<double>(positives));
    }
    if (curve.points.back() != std::make_pair(1.0, 1.0)) curve.points.emplace_back(1.0, 1.0);

    double auc = 0.0;
    for (size_t k = 1; k < curve.points.size(); ++k) {
        const auto& [x0, y0] = curve.points[k - 1];
        const auto& [x1, y1] = curve.points[k];
        auc += (x1 - x0) * (y0 + y1) * 0.5;
    }
    curve.auc = auc;
    return curve;
}

}  // namespace cqural
