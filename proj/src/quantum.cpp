#include "cqural/quantum.hpp"

#include <atomic>
#include <cmath>
#include <string>

namespace cqural {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kNormTolerance = 1e-9;
std::atomic<long> g_degenerate_embeddings{0};

void require_normalized(const Statevector& s, const char* op) {
    const double err = std::abs(s.norm_sq() - 1.0);
    if (err > kNormTolerance) {
        throw DataError(std::string(op) + ": state norm error " + std::to_string(err) +
                        " exceeds 1e-9");
    }
}

}  // namespace

Statevector evolve(const Statevector& state, const Gate& gate) {
    require_normalized(state, "evolve");
    Statevector out;
    if (std::holds_alternative<Hadamard>(gate)) {
        const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
        out.amp0 = inv_sqrt2 * (state.amp0 + state.amp1);
        out.amp1 = inv_sqrt2 * (state.amp0 - state.amp1);
    } else {
        const double half = std::get<RY>(gate).theta * 0.5;
        const double c = std::cos(half), s = std::sin(half);
        out.amp0 = c * state.amp0 - s * state.amp1;
        out.amp1 = s * state.amp0 + c * state.amp1;
    }
    return out;
}

double expectation_z(const Statevector& state) {
    return state.prob0() - state.prob1();
}

ShotResult sample_shots(const Statevector& state, long shots, std::mt19937& rng) {
    if (shots <= 0) throw ParameterError("sample_shots: shots must be positive, got " + std::to_string(shots));
    require_normalized(state, "sample_shots");
    const double p1 = state.prob1();
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    long ones = 0;
    for (long i = 0; i < shots; ++i) {
        if (uni(rng) < p1) ++ones;
    }
    return ShotResult{shots - ones, ones, shots};
}

double amplitude_to_angle(double a, double b) {
    if (std::abs(a) < 1e-12 && std::abs(b) < 1e-12) {
        g_degenerate_embeddings.fetch_add(1, std::memory_order_relaxed);
        return 0.0;
    }
    return std::atan2(b, a);
}

long degenerate_embedding_count() {
    return g_degenerate_embeddings.load(std::memory_order_relaxed);
}

void reset_degenerate_embedding_count() {
    g_degenerate_embeddings.store(0, std::memory_order_relaxed);
}

double clamp_probability(double p) {
    constexpr double lo = 1e-7, hi = 1.0 - 1e-7;
    return p < lo ? lo : (p > hi ? hi : p);
}

namespace {

Statevector head_state(HeadMode mode, double angle, double w) {
    Statevector s;
    if (mode == HeadMode::angle) {
        s = evolve(s, Hadamard{});
        s = evolve(s, RY{angle});
    } else {
        s = evolve(s, RY{2.0 * angle});
        s = evolve(s, RY{w});
    }
    return s;
}

}  // namespace

double head_prob1(HeadMode mode, double angle, double w, long shots, std::uint64_t shot_seed) {
    const Statevector s = head_state(mode, angle, w);
    if (shots <= 0) return s.prob1();
    std::mt19937 rng(static_cast<std::mt19937::result_type>(shot_seed));
    return sample_shots(s, shots, rng).frequency1();
}

std::pair<double, double> hybrid_head(const QuantumHead& head, const std::vector<double>& inputs,
                                      std::uint64_t shot_seed) {
    double p1 = 0.0;
    if (head.mode == HeadMode::angle) {
        if (inputs.size() != 1) {
            throw UsageError("hybrid_head: angle mode takes 1 input, got " + std::to_string(inputs.size()));
        }
        p1 = head_prob1(HeadMode::angle, inputs[0], 0.0, head.shots, shot_seed);
    } else {
        if (inputs.size() != 2) {
            throw UsageError("hybrid_head: amplitude mode takes 2 inputs, got " + std::to_string(inputs.size()));
        }
        const double phi = amplitude_to_angle(inputs[0], inputs[1]);
        p1 = head_prob1(HeadMode::amplitude, phi, head.w, head.shots, shot_seed);
    }
    const double p1c = clamp_probability(p1);
    const double p0c = clamp_probability(1.0 - p1);
    return {std::log(p0c), std::log(p1c)};
}

double param_shift_grad(const QuantumHead& head, AngleName which, double angle, double w,
                        ShiftTarget target, std::uint64_t shot_seed) {
    if (head.mode == HeadMode::angle && which != AngleName::theta) {
        throw UsageError("param_shift_grad: angle mode only exposes theta");
    }
    if (head.mode == HeadMode::amplitude && which == AngleName::theta) {
        throw UsageError("param_shift_grad: amplitude mode exposes phi and w");
    }

    // phi appears in its gate as RY(2*phi); shifting the gate angle by pi/2
    // means shifting phi by pi/4 and doubling the two-point difference.
    const double generator_scale = (which == AngleName::phi) ? 2.0 : 1.0;
    const double shift = (kPi / 2.0) / generator_scale;

    auto eval = [&](double delta) {
        double a = angle, ww = w;
        if (which == AngleName::w) {
            ww += delta;
        } else {
            a += delta;
        }
        const double p1 = head_prob1(head.mode, a, ww, head.shots, shot_seed);
        return target == ShiftTarget::prob1 ? p1 : 1.0 - 2.0 * p1;
    };

    return generator_scale * (eval(shift) - eval(-shift)) / 2.0;
}

}  // namespace cqural
