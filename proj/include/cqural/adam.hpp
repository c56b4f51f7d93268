#pragma once

#include <vector>

#include "cqural/tensor.hpp"

namespace cqural {

// Bias-corrected Adam. m and v mirror the parameter list passed to init();
// step() consumes (zeroes) the gradients it applies.
struct AdamState {
    double lr = 0.001;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    long step_count = 0;
    std::vector<std::vector<double>> m;
    std::vector<std::vector<double>> v;

    void init(const std::vector<Tensor>& params);
};

void adam_step(std::vector<Tensor>& params, AdamState& state);

}  // namespace cqural
