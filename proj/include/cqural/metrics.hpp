#pragma once

#include <array>
#include <vector>

#include "cqural/errors.hpp"

namespace cqural {

struct MetricsRow {
    double accuracy = 0.0;
    double precision0 = 0.0, recall0 = 0.0;
    double precision1 = 0.0, recall1 = 0.0;
    // confusion[truth][predicted]
    std::array<std::array<long, 2>, 2> confusion{{{0, 0}, {0, 0}}};

    long total() const {
        return confusion[0][0] + confusion[0][1] + confusion[1][0] + confusion[1][1];
    }
};

// Accuracy, per-class precision/recall and the 2x2 confusion matrix.
// A class the model never predicts gets precision 0.
MetricsRow compute_metrics(const std::vector<int>& predictions, const std::vector<int>& truths);

struct RocCurve {
    std::vector<std::pair<double, double>> points;  // (FPR, TPR), (0,0) .. (1,1)
    double auc = 0.0;
};

// Threshold sweep over the distinct class-1 scores with +-infinity
// sentinels; both coordinate sequences are nondecreasing.
RocCurve roc_points(const std::vector<double>& scores, const std::vector<int>& truths);

}  // namespace cqural
