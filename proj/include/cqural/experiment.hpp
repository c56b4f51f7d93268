#pragma once

#include <string>

#include "cqural/config.hpp"

namespace cqural {

enum class RunMode {
    train,     // plain training, injection disabled
    continual, // mid-training injection per config
    compare,   // all five models on one task
    explain,   // train, then GradCAM overlays for the test set
};

// Builds the task, trains per config, and writes metrics.csv,
// loss_curve.csv, timeline.csv, predictions.csv, config_echo.json,
// loss_curve.svg (and saliency PPMs when explaining) into
// out_dir/seed_<seed>/ for every seed. Throws Config/Data/Numeric errors;
// the CLI maps them to exit codes.
void run_experiment(const ExperimentConfig& config, RunMode mode);

// Task construction shared with tests and the CLI: load/generate the raw
// dataset, restrict to the class pair, split and standardize.
TaskDataset prepare_task(const ExperimentConfig& config, std::uint32_t seed);

}  // namespace cqural
