#pragma once

#include <complex>
#include <cstdint>
#include <random>
#include <utility>
#include <variant>
#include <vector>

#include "cqural/errors.hpp"

namespace cqural {

// Exact single-qubit statevector simulator. The trainable head circuits are
//   angle mode:     |0> -> H -> RY(theta)          P1 = (1 + sin theta) / 2
//   amplitude mode: |0> -> RY(2*phi) -> RY(w)      P1 = sin^2(phi + w/2)
// Shot sampling emulates a qasm-style backend; shots = 0 is analytic.

struct Statevector {
    std::complex<double> amp0{1.0, 0.0};
    std::complex<double> amp1{0.0, 0.0};

    double norm_sq() const { return std::norm(amp0) + std::norm(amp1); }
    double prob0() const { return std::norm(amp0); }
    double prob1() const { return std::norm(amp1); }
};

struct Hadamard {};
struct RY {
    double theta = 0.0;
};
using Gate = std::variant<Hadamard, RY>;

// Applies the gate matrix to a normalized state (norm error above 1e-9 is
// rejected). H = (1/sqrt2)[[1,1],[1,-1]], RY(t) = [[cos t/2, -sin t/2],
// [sin t/2, cos t/2]].
Statevector evolve(const Statevector& state, const Gate& gate);

// <Z> = |amp0|^2 - |amp1|^2.
double expectation_z(const Statevector& state);

struct ShotResult {
    long counts0 = 0;
    long counts1 = 0;
    long shots = 0;

    double frequency1() const { return shots > 0 ? static_cast<double>(counts1) / shots : 0.0; }
};

// counts1 is a binomial draw with success probability |amp1|^2, built from
// per-shot uniform draws so results are identical across platforms for a
// given generator state.
ShotResult sample_shots(const Statevector& state, long shots, std::mt19937& rng);

// Embedding half-angle for a real pair: phi = atan2(b, a), so that
// RY(2*phi)|0> = (cos phi, sin phi) is the normalized embedding of (a, b).
// Both magnitudes below 1e-12 degenerate to phi = 0 and bump a counter.
double amplitude_to_angle(double a, double b);
long degenerate_embedding_count();
void reset_degenerate_embedding_count();

enum class HeadMode { angle, amplitude };

struct QuantumHead {
    HeadMode mode = HeadMode::amplitude;
    double w = 0.0;  // trainable rotation angle, amplitude mode only
    long shots = 0;  // 0 = analytic probabilities
};

// P1 of the head circuit at explicit angles. Angle mode ignores w. With
// shots > 0 the probability is a shot frequency seeded by shot_seed.
double head_prob1(HeadMode mode, double angle, double w, long shots, std::uint64_t shot_seed);

// Log-probability pair for the classical inputs (1 value in angle mode,
// 2 in amplitude mode). Probabilities are clamped to [1e-7, 1 - 1e-7]
// before the logarithm.
std::pair<double, double> hybrid_head(const QuantumHead& head, const std::vector<double>& inputs,
                                      std::uint64_t shot_seed = 0);

double clamp_probability(double p);

enum class AngleName { theta, phi, w };
enum class ShiftTarget { expectation_z, prob1 };

// Parameter-shift derivative of the target scalar w.r.t. the named angle.
// The +-pi/2 shift applies to the RY gate angle; phi enters its gate as
// RY(2*phi), so its shift is +-pi/4 in phi with a factor-2 chain rule.
// Exact (not an approximation) in analytic mode. In shot mode both
// evaluations reuse shot_seed.
double param_shift_grad(const QuantumHead& head, AngleName which, double angle, double w,
                        ShiftTarget target = ShiftTarget::prob1, std::uint64_t shot_seed = 0);

}  // namespace cqural
