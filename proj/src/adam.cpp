#include "cqural/adam.hpp"

#include <cmath>
#include <string>

namespace cqural {

void AdamState::init(const std::vector<Tensor>& params) {
    step_count = 0;
    m.clear();
    v.clear();
    for (const Tensor& p : params) {
        m.emplace_back(static_cast<size_t>(p.size()), 0.0);
        v.emplace_back(static_cast<size_t>(p.size()), 0.0);
    }
}

void adam_step(std::vector<Tensor>& params, AdamState& state) {
    if (state.m.size() != params.size() || state.v.size() != params.size()) {
        throw UsageError("adam_step: state not initialized for " + std::to_string(params.size()) +
                         " parameters");
    }
    for (size_t i = 0; i < params.size(); ++i) {
        if (!params[i].has_grad()) {
            throw UsageError("adam_step: parameter " + std::to_string(i) + " has no gradient");
        }
        if (state.m[i].size() != params[i].values().size()) {
            throw UsageError("adam_step: state shape mismatch at parameter " + std::to_string(i));
        }
    }

    state.step_count += 1;
    const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step_count));
    const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step_count));

    for (size_t i = 0; i < params.size(); ++i) {
        auto& x = params[i].values();
        auto& g = params[i].grad();
        auto& m = state.m[i];
        auto& v = state.v[i];
        for (size_t j = 0; j < x.size(); ++j) {
            m[j] = state.beta1 * m[j] + (1.0 - state.beta1) * g[j];
            v[j] = state.beta2 * v[j] + (1.0 - state.beta2) * g[j] * g[j];
            const double mhat = m[j] / c1;
            const double vhat = v[j] / c2;
            x[j] -= state.lr * mhat / (std::sqrt(vhat) + state.eps);
        }
        params[i].zero_grad();
    }
}

}  // namespace cqural
