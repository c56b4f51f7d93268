#pragma once

#include <cstdint>

#include "cqural/quantum.hpp"
#include "cqural/tensor.hpp"

namespace cqural {

// Tape node for the quantum head. Forward maps the head inputs (1 angle or
// 2 amplitudes from fc5) to a log-probability pair; backward combines the
// parameter-shift rule on the circuit angles with the atan2 chain rule for
// the raw amplitude pair. head_w must be a 1-element parameter in amplitude
// mode and may be null in angle mode.
Tensor hybrid_head_op(Tape* tape, const Tensor& head_in, Tensor* head_w, const QuantumHead& cfg,
                      std::uint64_t shot_seed);

// Single-qubit baseline: RY(x) then RY(w) on |0>, producing log probabilities
// for a fixed scalar feature angle x. Only w is trainable.
Tensor pure_qnn_op(Tape* tape, double x_angle, Tensor& w_param, long shots, std::uint64_t shot_seed);

// Closed-circuit probabilities for the baseline, (P0, P1) with
// P1 = sin^2((x + w) / 2).
std::pair<double, double> pure_qnn_forward(double x_angle, double w);

}  // namespace cqural
