#include "cqural/ops.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace cqural {

namespace {

void require_rank(const Tensor& t, size_t rank, const char* op, const char* what) {
    if (t.shape().size() != rank) {
        throw DimensionError(std::string(op) + ": " + what + " must have rank " +
                             std::to_string(rank) + ", got " + shape_string(t.shape()));
    }
}

int tape_id(Tape* tape, const Tensor& t) {
    return tape->node_of(t);
}

}  // namespace

Tensor conv2d_valid(Tape* tape, const Tensor& input, const Tensor& kernels, const Tensor& bias) {
    require_rank(input, 4, "conv2d_valid", "input");
    require_rank(kernels, 4, "conv2d_valid", "kernels");
    require_rank(bias, 1, "conv2d_valid", "bias");
    const int n = input.dim(0), cin = input.dim(1), h = input.dim(2), w = input.dim(3);
    const int cout = kernels.dim(0), kcin = kernels.dim(1), kh = kernels.dim(2), kw = kernels.dim(3);
    if (kcin != cin) {
        throw DimensionError("conv2d_valid: channel axis mismatch, input Cin=" + std::to_string(cin) +
                             " vs kernel Cin=" + std::to_string(kcin));
    }
    if (kh != kw) throw DimensionError("conv2d_valid: kernel axis H != W " + shape_string(kernels.shape()));
    if (kh > h) throw DimensionError("conv2d_valid: kernel height " + std::to_string(kh) +
                                     " exceeds input height " + std::to_string(h));
    if (kw > w) throw DimensionError("conv2d_valid: kernel width " + std::to_string(kw) +
                                     " exceeds input width " + std::to_string(w));
    if (bias.dim(0) != cout) {
        throw DimensionError("conv2d_valid: bias axis length " + std::to_string(bias.dim(0)) +
                             " vs Cout=" + std::to_string(cout));
    }

    const int oh = h - kh + 1, ow = w - kw + 1;
    Tensor out({n, cout, oh, ow});
    const double* x = input.data();
    const double* k = kernels.data();
    const double* b = bias.data();
    double* y = out.data();

    for (int in = 0; in < n; ++in) {
        for (int oc = 0; oc < cout; ++oc) {
            for (int oy = 0; oy < oh; ++oy) {
                for (int ox = 0; ox < ow; ++ox) {
                    double acc = b[oc];
                    for (int ic = 0; ic < cin; ++ic) {
                        const double* xp = x + ((in * cin + ic) * h + oy) * w + ox;
                        const double* kp = k + ((oc * cin + ic) * kh) * kw;
                        for (int ky = 0; ky < kh; ++ky) {
                            for (int kx = 0; kx < kw; ++kx) acc += xp[ky * w + kx] * kp[ky * kw + kx];
                        }
                    }
                    y[((in * cout + oc) * oh + oy) * ow + ox] = acc;
                }
            }
        }
    }

    if (tape) {
        int xi = tape_id(tape, input), ki = tape_id(tape, kernels), bi = tape_id(tape, bias);
        auto xs = input.storage(), ks = kernels.storage(), bs = bias.storage();
        tape->record("conv2d_valid", {xi, ki, bi}, out,
                     [=](const std::vector<double>& og) {
                         if (xs->grad.empty()) xs->grad.assign(xs->data.size(), 0.0);
                         if (ks->grad.empty()) ks->grad.assign(ks->data.size(), 0.0);
                         if (bs->grad.empty()) bs->grad.assign(bs->data.size(), 0.0);
                         const double* xv = xs->data.data();
                         const double* kv = ks->data.data();
                         for (int in = 0; in < n; ++in) {
                             for (int oc = 0; oc < cout; ++oc) {
                                 for (int oy = 0; oy < oh; ++oy) {
                                     for (int ox = 0; ox < ow; ++ox) {
                                         const double g = og[static_cast<size_t>(((in * cout + oc) * oh + oy) * ow + ox)];
                                         if (g == 0.0) continue;
                                         bs->grad[static_cast<size_t>(oc)] += g;
                                         for (int ic = 0; ic < cin; ++ic) {
                                             double* xg = xs->grad.data() + ((in * cin + ic) * h + oy) * w + ox;
                                             double* kg = ks->grad.data() + ((oc * cin + ic) * kh) * kw;
                                             const double* xp = xv + ((in * cin + ic) * h + oy) * w + ox;
                                             const double* kp = kv + ((oc * cin + ic) * kh) * kw;
                                             for (int ky = 0; ky < kh; ++ky) {
                                                 for (int kx = 0; kx < kw; ++kx) {
                                                     xg[ky * w + kx] += g * kp[ky * kw + kx];
                                                     kg[ky * kw + kx] += g * xp[ky * w + kx];
                                                 }
                                             }
                                         }
                                     }
                                 }
                             }
                         }
                     });
    }
    return out;
}

Tensor linear_affine(Tape* tape, const Tensor& input, const Tensor& weight, const Tensor& bias) {
    require_rank(input, 1, "linear_affine", "input");
    require_rank(weight, 2, "linear_affine", "weight");
    require_rank(bias, 1, "linear_affine", "bias");
    const int m = weight.dim(0), d = weight.dim(1);
    if (input.dim(0) != d) {
        throw DimensionError("linear_affine: input length " + std::to_string(input.dim(0)) +
                             " vs weight columns " + std::to_string(d));
    }
    if (bias.dim(0) != m) {
        throw DimensionError("linear_affine: bias length " + std::to_string(bias.dim(0)) +
                             " vs weight rows " + std::to_string(m));
    }

    Tensor out({m});
    const double* x = input.data();
    const double* wv = weight.data();
    const double* b = bias.data();
    for (int r = 0; r < m; ++r) {
        double acc = b[r];
        const double* row = wv + static_cast<size_t>(r) * d;
        for (int c = 0; c < d; ++c) acc += row[c] * x[c];
        out.data()[r] = acc;
    }

    if (tape) {
        int xi = tape_id(tape, input), wi = tape_id(tape, weight), bi = tape_id(tape, bias);
        auto xs = input.storage(), ws = weight.storage(), bs = bias.storage();
        tape->record("linear_affine", {xi, wi, bi}, out,
                     [=](const std::vector<double>& og) {
                         if (xs->grad.empty()) xs->grad.assign(xs->data.size(), 0.0);
                         if (ws->grad.empty()) ws->grad.assign(ws->data.size(), 0.0);
                         if (bs->grad.empty()) bs->grad.assign(bs->data.size(), 0.0);
                         for (int r = 0; r < m; ++r) {
                             const double g = og[static_cast<size_t>(r)];
                             if (g == 0.0) continue;
                             bs->grad[static_cast<size_t>(r)] += g;
                             const double* row = ws->data.data() + static_cast<size_t>(r) * d;
                             double* wg = ws->grad.data() + static_cast<size_t>(r) * d;
                             for (int c = 0; c < d; ++c) {
                                 xs->grad[static_cast<size_t>(c)] += g * row[c];
                                 wg[c] += g * xs->data[static_cast<size_t>(c)];
                             }
                         }
                     });
    }
    return out;
}

Tensor relu(Tape* tape, const Tensor& input) {
    Tensor out(input.shape());
    const double* x = input.data();
    double* y = out.data();
    const int n = input.size();
    for (int i = 0; i < n; ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;

    if (tape) {
        int xi = tape_id(tape, input);
        auto xs = input.storage();
        tape->record("relu", {xi}, out, [=](const std::vector<double>& og) {
            if (xs->grad.empty()) xs->grad.assign(xs->data.size(), 0.0);
            for (size_t i = 0; i < og.size(); ++i) {
                if (xs->data[i] > 0.0) xs->grad[i] += og[i];
            }
        });
    }
    return out;
}

Tensor dropout2d(Tape* tape, const Tensor& input, double p, Mode mode, std::mt19937& rng) {
    if (p < 0.0 || p > 1.0) throw ParameterError("dropout2d: p must lie in [0, 1], got " + std::to_string(p));
    if (mode == Mode::eval) return input;  // identity, any p
    if (p == 1.0) throw ParameterError("dropout2d: p = 1 would zero every channel");
    require_rank(input, 4, "dropout2d", "input");

    const int n = input.dim(0), c = input.dim(1), h = input.dim(2), w = input.dim(3);
    const int plane = h * w;
    std::vector<double> mask(static_cast<size_t>(n) * c, 1.0);
    if (p > 0.0) {
        std::uniform_real_distribution<double> uni(0.0, 1.0);
        const double keep_scale = 1.0 / (1.0 - p);
        for (auto& m : mask) m = uni(rng) < p ? 0.0 : keep_scale;
    }

    Tensor out(input.shape());
    const double* x = input.data();
    double* y = out.data();
    for (int nc = 0; nc < n * c; ++nc) {
        const double m = mask[static_cast<size_t>(nc)];
        for (int i = 0; i < plane; ++i) y[nc * plane + i] = m * x[nc * plane + i];
    }

    if (tape) {
        int xi = tape_id(tape, input);
        auto xs = input.storage();
        tape->record("dropout2d", {xi}, out, [=](const std::vector<double>& og) {
            if (xs->grad.empty()) xs->grad.assign(xs->data.size(), 0.0);
            for (int nc = 0; nc < n * c; ++nc) {
                const double m = mask[static_cast<size_t>(nc)];
                if (m == 0.0) continue;
                for (int i = 0; i < plane; ++i) {
                    xs->grad[static_cast<size_t>(nc * plane + i)] += m * og[static_cast<size_t>(nc * plane + i)];
                }
            }
        });
    }
    return out;
}

Tensor flatten(Tape* tape, const Tensor& input) {
    Tensor out({input.size()}, input.values());
    if (tape) {
        int xi = tape_id(tape, input);
        auto xs = input.storage();
        tape->record("flatten", {xi}, out, [=](const std::vector<double>& og) {
            if (xs->grad.empty()) xs->grad.assign(xs->data.size(), 0.0);
            for (size_t i = 0; i < og.size(); ++i) xs->grad[i] += og[i];
        });
    }
    return out;
}

Tensor scaled_tanh(Tape* tape, const Tensor& input, double scale) {
    Tensor out(input.shape());
    const int n = input.size();
    for (int i = 0; i < n; ++i) out.data()[i] = scale * std::tanh(input.data()[i]);

    if (tape) {
        int xi = tape_id(tape, input);
        auto xs = input.storage();
        tape->record("scaled_tanh", {xi}, out, [=](const std::vector<double>& og) {
            if (xs->grad.empty()) xs->grad.assign(xs->data.size(), 0.0);
            for (size_t i = 0; i < og.size(); ++i) {
                const double t = std::tanh(xs->data[i]);
                xs->grad[i] += og[i] * scale * (1.0 - t * t);
            }
        });
    }
    return out;
}

Tensor log_softmax(Tape* tape, const Tensor& logits) {
    require_rank(logits, 1, "log_softmax", "logits");
    const int n = logits.size();
    if (n == 0) throw DimensionError("log_softmax: empty logits");
    const double* x = logits.data();
    const double mx = *std::max_element(x, x + n);
    double sum = 0.0;
    for (int i = 0; i < n; ++i) sum += std::exp(x[i] - mx);
    const double lse = mx + std::log(sum);
    Tensor out({n});
    for (int i = 0; i < n; ++i) out.data()[i] = x[i] - lse;

    if (tape) {
        int xi = tape_id(tape, logits);
        auto xs = logits.storage();
        std::vector<double> probs(static_cast<size_t>(n));
        for (int i = 0; i < n; ++i) probs[static_cast<size_t>(i)] = std::exp(out.data()[i]);
        tape->record("log_softmax", {xi}, out, [=](const std::vector<double>& og) {
            if (xs->grad.empty()) xs->grad.assign(xs->data.size(), 0.0);
            double gsum = 0.0;
            for (double g : og) gsum += g;
            for (size_t i = 0; i < og.size(); ++i) xs->grad[i] += og[i] - probs[i] * gsum;
        });
    }
    return out;
}

Tensor pick(Tape* tape, const Tensor& input, int index) {
    if (index < 0 || index >= input.size()) {
        throw UsageError("pick: index " + std::to_string(index) + " out of range for size " +
                         std::to_string(input.size()));
    }
    Tensor out = Tensor::scalar(input.data()[index]);
    if (tape) {
        int xi = tape_id(tape, input);
        auto xs = input.storage();
        tape->record("pick", {xi}, out, [=](const std::vector<double>& og) {
            if (xs->grad.empty()) xs->grad.assign(xs->data.size(), 0.0);
            xs->grad[static_cast<size_t>(index)] += og[0];
        });
    }
    return out;
}

Tensor nll_scalar(Tape* tape, const Tensor& log_probs, int target) {
    if (target < 0 || target >= log_probs.size()) {
        throw UsageError("nll_scalar: target " + std::to_string(target) + " out of range");
    }
    Tensor out = Tensor::scalar(-log_probs.data()[target]);
    if (tape) {
        int xi = tape_id(tape, log_probs);
        auto xs = log_probs.storage();
        tape->record("nll", {xi}, out, [=](const std::vector<double>& og) {
            if (xs->grad.empty()) xs->grad.assign(xs->data.size(), 0.0);
            xs->grad[static_cast<size_t>(target)] -= og[0];
        });
    }
    return out;
}

Tensor mean_scalars(Tape* tape, const std::vector<Tensor>& scalars) {
    if (scalars.empty()) throw UsageError("mean_scalars: empty list");
    double acc = 0.0;
    for (const Tensor& s : scalars) acc += s.item();
    const double inv = 1.0 / static_cast<double>(scalars.size());
    Tensor out = Tensor::scalar(acc * inv);

    if (tape) {
        std::vector<int> ids;
        std::vector<std::shared_ptr<Tensor::Storage>> sts;
        ids.reserve(scalars.size());
        sts.reserve(scalars.size());
        for (const Tensor& s : scalars) {
            ids.push_back(tape_id(tape, s));
            sts.push_back(s.storage());
        }
        tape->record("mean_scalars", ids, out, [=](const std::vector<double>& og) {
            for (const auto& st : sts) {
                if (st->grad.empty()) st->grad.assign(st->data.size(), 0.0);
                st->grad[0] += og[0] * inv;
            }
        });
    }
    return out;
}

Tensor add_scalars(Tape* tape, const Tensor& a, const Tensor& b) {
    Tensor out = Tensor::scalar(a.item() + b.item());
    if (tape) {
        int ai = tape_id(tape, a), bi = tape_id(tape, b);
        auto as = a.storage(), bs = b.storage();
        tape->record("add_scalars", {ai, bi}, out, [=](const std::vector<double>& og) {
            if (as->grad.empty()) as->grad.assign(as->data.size(), 0.0);
            if (bs->grad.empty()) bs->grad.assign(bs->data.size(), 0.0);
            as->grad[0] += og[0];
            bs->grad[0] += og[0];
        });
    }
    return out;
}

Tensor scale_scalar(Tape* tape, const Tensor& a, double c) {
    Tensor out = Tensor::scalar(a.item() * c);
    if (tape) {
        int ai = tape_id(tape, a);
        auto as = a.storage();
        tape->record("scale_scalar", {ai}, out, [=](const std::vector<double>& og) {
            if (as->grad.empty()) as->grad.assign(as->data.size(), 0.0);
            as->grad[0] += og[0] * c;
        });
    }
    return out;
}

}  // namespace cqural
