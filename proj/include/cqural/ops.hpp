#pragma once

#include <random>
#include <vector>

#include "cqural/tensor.hpp"

namespace cqural {

// Differentiable layer set for the conv trunk. Every op takes an optional
// tape; pass nullptr for an untaped (evaluation) forward. Inputs that should
// receive gradients must already be on the tape (use Tape::watch for leaves).

// Valid cross-correlation, stride 1, no padding. input N x Cin x H x W,
// kernels Cout x Cin x K x K, bias length Cout -> N x Cout x (H-K+1) x (W-K+1).
Tensor conv2d_valid(Tape* tape, const Tensor& input, const Tensor& kernels, const Tensor& bias);

// weight (M x D) * input (D) + bias (M) -> M.
Tensor linear_affine(Tape* tape, const Tensor& input, const Tensor& weight, const Tensor& bias);

// Elementwise max(0, x). Gradient is 0 at x = 0.
Tensor relu(Tape* tape, const Tensor& input);

// Channel dropout over N x C x H x W with inverted scaling 1/(1-p).
// Eval mode is the identity. Mask is drawn from rng, so calls are
// deterministic given the generator state.
Tensor dropout2d(Tape* tape, const Tensor& input, double p, Mode mode, std::mt19937& rng);

// Reshape to a flat vector; shares no storage (copies values).
Tensor flatten(Tape* tape, const Tensor& input);

// scale * tanh(x), used to bound head rotation angles.
Tensor scaled_tanh(Tape* tape, const Tensor& input, double scale);

// log(softmax(logits)) for a flat logit vector, numerically shifted by max.
Tensor log_softmax(Tape* tape, const Tensor& logits);

// -log_probs[target]; negative log-likelihood of one example.
Tensor nll_scalar(Tape* tape, const Tensor& log_probs, int target);

// +input[index] as a scalar; gradient routes 1 into that slot.
Tensor pick(Tape* tape, const Tensor& input, int index);

// Mean of scalar tensors.
Tensor mean_scalars(Tape* tape, const std::vector<Tensor>& scalars);

Tensor add_scalars(Tape* tape, const Tensor& a, const Tensor& b);
Tensor scale_scalar(Tape* tape, const Tensor& a, double c);

}  // namespace cqural
