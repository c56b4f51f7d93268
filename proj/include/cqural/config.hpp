#pragma once

#include <string>
#include <vector>

#include "cqural/data.hpp"
#include "cqural/quantum.hpp"
#include "cqural/trainer.hpp"

namespace cqural {

// Experiment description loaded from JSON. Unknown keys are rejected;
// every defaulted field is materialized into the echoed config so
// under-specified parameters stay visible.
struct ExperimentConfig {
    std::string dataset = "synthetic";  // synthetic | mnist | cifar10
    std::string mnist_images;
    std::string mnist_labels;
    std::vector<std::string> cifar_batches;
    int class_a = 0;
    int class_b = 1;
    int samples_per_class = 100;
    double injection_fraction = 0.5;       // pool reserve sizing
    std::string injection_source = "same";  // same | cross

    std::string model = "cqural";  // cqural | cnn | svm | hybrid_svm | qnn

    int epochs = 30;
    int checkpoint_stride = 5;
    int batch_size = 8;
    double lr = 0.001;
    int injection_epoch = 29;
    double injection_ratio = 0.5;

    std::string head_mode = "amplitude";  // amplitude | angle
    long shots = 0;
    int conv1_channels = 8;
    int conv2_channels = 16;
    int kernel_size = 5;
    int fc4_width = 32;
    double dropout_p = 0.25;

    ReplaySettings replay;

    // Synthetic task shape.
    int synthetic_height = 16;
    int synthetic_width = 16;
    double synthetic_margin = 120.0;

    // Baseline knobs.
    double svm_lambda = 0.01;
    int svm_epochs = 20;
    double hybrid_svm_gamma = 16.0;

    std::vector<std::uint32_t> seeds{1, 2, 3, 4, 5};
    std::string out_dir = "out";
    bool explain = false;
    double explain_alpha = 0.6;

    HeadMode head_mode_enum() const;
    TrainConfig train_config(std::uint32_t seed) const;
};

ExperimentConfig parse_experiment_config(const std::string& json_text);
ExperimentConfig load_experiment_config(const std::string& path);

// Full config with every default materialized, pretty-printed JSON.
std::string echo_experiment_config(const ExperimentConfig& cfg);

}  // namespace cqural
