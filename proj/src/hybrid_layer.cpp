#include "cqural/hybrid_layer.hpp"

#include <cmath>

namespace cqural {

Tensor hybrid_head_op(Tape* tape, const Tensor& head_in, Tensor* head_w, const QuantumHead& cfg,
                      std::uint64_t shot_seed) {
    const int arity = cfg.mode == HeadMode::angle ? 1 : 2;
    if (head_in.size() != arity) {
        throw UsageError("hybrid_head_op: head input arity " + std::to_string(head_in.size()) +
                         " does not match mode arity " + std::to_string(arity));
    }
    if (cfg.mode == HeadMode::amplitude && (head_w == nullptr || head_w->size() != 1)) {
        throw UsageError("hybrid_head_op: amplitude mode needs a 1-element trainable angle");
    }

    QuantumHead head = cfg;
    double p1 = 0.0;
    double phi = 0.0;
    bool degenerate = false;
    if (cfg.mode == HeadMode::angle) {
        p1 = head_prob1(HeadMode::angle, head_in.data()[0], 0.0, cfg.shots, shot_seed);
    } else {
        head.w = head_w->data()[0];
        const double a = head_in.data()[0], b = head_in.data()[1];
        degenerate = std::abs(a) < 1e-12 && std::abs(b) < 1e-12;
        phi = amplitude_to_angle(a, b);
        p1 = head_prob1(HeadMode::amplitude, phi, head.w, cfg.shots, shot_seed);
    }

    const double p1c = clamp_probability(p1);
    const double p0c = clamp_probability(1.0 - p1);
    Tensor out({2}, {std::log(p0c), std::log(p1c)});

    if (tape) {
        int in_id = tape->node_of(head_in);
        std::vector<int> inputs{in_id};
        auto in_st = head_in.storage();
        std::shared_ptr<Tensor::Storage> w_st;
        if (cfg.mode == HeadMode::amplitude) {
            inputs.push_back(tape->node_of(*head_w));
            w_st = head_w->storage();
        }
        tape->record("hybrid_head", inputs, out, [=](const std::vector<double>& og) {
            // d(logP)/dP1 through the clamped probabilities.
            const double g_p1 = og[1] / p1c - og[0] / p0c;
            if (in_st->grad.empty()) in_st->grad.assign(in_st->data.size(), 0.0);
            if (head.mode == HeadMode::angle) {
                const double dtheta = param_shift_grad(head, AngleName::theta, in_st->data[0], 0.0,
                                                       ShiftTarget::prob1, shot_seed);
                in_st->grad[0] += g_p1 * dtheta;
                return;
            }
            if (w_st->grad.empty()) w_st->grad.assign(w_st->data.size(), 0.0);
            const double dw = param_shift_grad(head, AngleName::w, phi, head.w,
                                               ShiftTarget::prob1, shot_seed);
            w_st->grad[0] += g_p1 * dw;
            if (!degenerate) {
                const double dphi = param_shift_grad(head, AngleName::phi, phi, head.w,
                                                     ShiftTarget::prob1, shot_seed);
                const double a = in_st->data[0], b = in_st->data[1];
                const double r2 = a * a + b * b;
                in_st->grad[0] += g_p1 * dphi * (-b / r2);
                in_st->grad[1] += g_p1 * dphi * (a / r2);
            }
        });
    }
    return out;
}

Tensor pure_qnn_op(Tape* tape, double x_angle, Tensor& w_param, long shots, std::uint64_t shot_seed) {
    if (w_param.size() != 1) throw UsageError("pure_qnn_op: w must be a 1-element parameter");
    const double w = w_param.data()[0];

    Statevector s;
    s = evolve(s, RY{x_angle});
    s = evolve(s, RY{w});
    double p1 = s.prob1();
    if (shots > 0) {
        std::mt19937 rng(static_cast<std::mt19937::result_type>(shot_seed));
        p1 = sample_shots(s, shots, rng).frequency1();
    }
    const double p1c = clamp_probability(p1);
    const double p0c = clamp_probability(1.0 - p1);
    Tensor out({2}, {std::log(p0c), std::log(p1c)});

    if (tape) {
        int w_id = tape->node_of(w_param);
        auto w_st = w_param.storage();
        QuantumHead pseudo;  // reuse the RY(2*phi)+RY(w) circuit with phi = x/2
        pseudo.mode = HeadMode::amplitude;
        pseudo.shots = shots;
        pseudo.w = w;
        tape->record("pure_qnn", {w_id}, out, [=](const std::vector<double>& og) {
            if (w_st->grad.empty()) w_st->grad.assign(w_st->data.size(), 0.0);
            const double g_p1 = og[1] / p1c - og[0] / p0c;
            const double dw = param_shift_grad(pseudo, AngleName::w, x_angle / 2.0, w,
                                               ShiftTarget::prob1, shot_seed);
            w_st->grad[0] += g_p1 * dw;
        });
    }
    return out;
}

std::pair<double, double> pure_qnn_forward(double x_angle, double w) {
    Statevector s;
    s = evolve(s, RY{x_angle});
    s = evolve(s, RY{w});
    return {s.prob0(), s.prob1()};
}

}  // namespace cqural
