#include "cqural/models.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "json.hpp"

namespace cqural {

namespace {

constexpr double kPi = 3.14159265358979323846;

Tensor uniform_init(std::vector<int> shape, double bound, std::mt19937& rng) {
    Tensor t(std::move(shape));
    std::uniform_real_distribution<double> uni(-bound, bound);
    for (int i = 0; i < t.size(); ++i) t.data()[i] = uni(rng);
    return t;
}

Tensor image_tensor(const LabeledImage& img) {
    return Tensor({1, img.channels, img.height, img.width}, img.pixels);
}

void check_image_shape(const CquralConfig& cfg, const LabeledImage& img, const char* who) {
    if (img.channels != cfg.in_channels || img.height != cfg.in_height || img.width != cfg.in_width) {
        throw DimensionError(std::string(who) + ": image shape (" + std::to_string(img.channels) + "x" +
                             std::to_string(img.height) + "x" + std::to_string(img.width) +
                             ") does not match config (" + std::to_string(cfg.in_channels) + "x" +
                             std::to_string(cfg.in_height) + "x" + std::to_string(cfg.in_width) + ")");
    }
}

void check_config(const CquralConfig& cfg) {
    if (cfg.conv2_out_height() < 1 || cfg.conv2_out_width() < 1) {
        throw DimensionError("config: kernel " + std::to_string(cfg.kernel_size) +
                             " does not fit twice into " + std::to_string(cfg.in_height) + "x" +
                             std::to_string(cfg.in_width) + " input");
    }
    if (cfg.dropout_p < 0.0 || cfg.dropout_p >= 1.0) {
        throw ParameterError("config: dropout_p must lie in [0, 1)");
    }
}

}  // namespace

void TrainableModel::zero_grads() {
    for (Tensor& p : parameters()) p.zero_grad();
}

Tensor ConvFeatureModel::example_loss(Tape& tape, const LabeledImage& img, std::mt19937& dropout_rng,
                                      std::uint64_t shot_seed) {
    TapedForward fwd = forward_features(&tape, img, Mode::train, dropout_rng, shot_seed);
    return nll_scalar(&tape, fwd.log_probs, img.label);
}

ConvTrunk::ConvTrunk(const CquralConfig& cfg, std::mt19937& rng) {
    const int k = cfg.kernel_size;
    const double b1 = 1.0 / std::sqrt(static_cast<double>(cfg.in_channels) * k * k);
    conv1_w = uniform_init({cfg.conv1_channels, cfg.in_channels, k, k}, b1, rng);
    conv1_b = uniform_init({cfg.conv1_channels}, b1, rng);
    const double b2 = 1.0 / std::sqrt(static_cast<double>(cfg.conv1_channels) * k * k);
    conv2_w = uniform_init({cfg.conv2_channels, cfg.conv1_channels, k, k}, b2, rng);
    conv2_b = uniform_init({cfg.conv2_channels}, b2, rng);
    const double b4 = 1.0 / std::sqrt(static_cast<double>(cfg.flat_size()));
    fc4_w = uniform_init({cfg.fc4_width, cfg.flat_size()}, b4, rng);
    fc4_b = uniform_init({cfg.fc4_width}, b4, rng);
}

Tensor ConvTrunk::features(Tape* tape, const Tensor& input) const {
    Tensor h1 = relu(tape, conv2d_valid(tape, input, conv1_w, conv1_b));
    return relu(tape, conv2d_valid(tape, h1, conv2_w, conv2_b));
}

Tensor ConvTrunk::fc4_activations(Tape* tape, const Tensor& conv_features, Mode mode, double dropout_p,
                                  std::mt19937& dropout_rng) const {
    Tensor dropped = dropout2d(tape, conv_features, dropout_p, mode, dropout_rng);
    Tensor flat = flatten(tape, dropped);
    return relu(tape, linear_affine(tape, flat, fc4_w, fc4_b));
}

std::vector<std::pair<std::string, Tensor>> ConvTrunk::named_parameters() {
    return {{"conv1_w", conv1_w}, {"conv1_b", conv1_b}, {"conv2_w", conv2_w},
            {"conv2_b", conv2_b}, {"fc4_w", fc4_w},     {"fc4_b", fc4_b}};
}

long ConvTrunk::parameter_count() const {
    return conv1_w.size() + conv1_b.size() + conv2_w.size() + conv2_b.size() + fc4_w.size() +
           fc4_b.size();
}

CquralModel::CquralModel(const CquralConfig& cfg) : cfg_(cfg) {
    check_config(cfg);
    std::mt19937 rng(cfg.seed);
    trunk_ = ConvTrunk(cfg, rng);
    const int head_arity = cfg.head_mode == HeadMode::angle ? 1 : 2;
    const double b5 = 1.0 / std::sqrt(static_cast<double>(cfg.fc4_width));
    fc5_w_ = uniform_init({head_arity, cfg.fc4_width}, b5, rng);
    fc5_b_ = uniform_init({head_arity}, b5, rng);
    if (cfg.head_mode == HeadMode::amplitude) head_w_ = uniform_init({1}, 1.0, rng);
}

TapedForward CquralModel::forward_features(Tape* tape, const LabeledImage& img, Mode mode,
                                           std::mt19937& dropout_rng, std::uint64_t shot_seed) {
    check_image_shape(cfg_, img, "cqural_forward");
    TapedForward out;
    out.conv2_features = trunk_.features(tape, image_tensor(img));
    Tensor h4 = trunk_.fc4_activations(tape, out.conv2_features, mode, cfg_.dropout_p, dropout_rng);
    Tensor head_in = scaled_tanh(tape, linear_affine(tape, h4, fc5_w_, fc5_b_), kPi);
    QuantumHead head{cfg_.head_mode, cfg_.head_mode == HeadMode::amplitude ? head_w_.data()[0] : 0.0,
                     cfg_.shots};
    out.log_probs = hybrid_head_op(tape, head_in,
                                   cfg_.head_mode == HeadMode::amplitude ? &head_w_ : nullptr, head,
                                   shot_seed);
    return out;
}

Prediction CquralModel::predict(const LabeledImage& img) const {
    std::mt19937 unused(0);
    auto& self = const_cast<CquralModel&>(*this);
    TapedForward fwd = self.forward_features(nullptr, img, Mode::eval, unused, 0);
    const double p1 = std::exp(fwd.log_probs.data()[1]);
    return {fwd.log_probs.data()[1] > fwd.log_probs.data()[0] ? 1 : 0, p1};
}

std::vector<Tensor> CquralModel::parameters() {
    std::vector<Tensor> out{trunk_.conv1_w, trunk_.conv1_b, trunk_.conv2_w,
                            trunk_.conv2_b, trunk_.fc4_w,   trunk_.fc4_b,
                            fc5_w_,         fc5_b_};
    if (cfg_.head_mode == HeadMode::amplitude) out.push_back(head_w_);
    return out;
}

std::vector<std::pair<std::string, Tensor>> CquralModel::named_parameters() {
    auto out = trunk_.named_parameters();
    out.emplace_back("fc5_w", fc5_w_);
    out.emplace_back("fc5_b", fc5_b_);
    if (cfg_.head_mode == HeadMode::amplitude) out.emplace_back("head_w", head_w_);
    return out;
}

ClassicalCnnModel::ClassicalCnnModel(const CquralConfig& cfg) : cfg_(cfg) {
    check_config(cfg);
    std::mt19937 rng(cfg.seed);
    trunk_ = ConvTrunk(cfg, rng);
    const double b5 = 1.0 / std::sqrt(static_cast<double>(cfg.fc4_width));
    fc5_w_ = uniform_init({2, cfg.fc4_width}, b5, rng);
    fc5_b_ = uniform_init({2}, b5, rng);
}

TapedForward ClassicalCnnModel::forward_features(Tape* tape, const LabeledImage& img, Mode mode,
                                                 std::mt19937& dropout_rng, std::uint64_t) {
    check_image_shape(cfg_, img, "classical_cnn_forward");
    TapedForward out;
    out.conv2_features = trunk_.features(tape, image_tensor(img));
    Tensor h4 = trunk_.fc4_activations(tape, out.conv2_features, mode, cfg_.dropout_p, dropout_rng);
    Tensor logits = linear_affine(tape, h4, fc5_w_, fc5_b_);
    out.log_probs = log_softmax(tape, logits);
    return out;
}

Prediction ClassicalCnnModel::predict(const LabeledImage& img) const {
    std::mt19937 unused(0);
    auto& self = const_cast<ClassicalCnnModel&>(*this);
    TapedForward fwd = self.forward_features(nullptr, img, Mode::eval, unused, 0);
    const double p1 = std::exp(fwd.log_probs.data()[1]);
    return {fwd.log_probs.data()[1] > fwd.log_probs.data()[0] ? 1 : 0, p1};
}

std::vector<Tensor> ClassicalCnnModel::parameters() {
    return {trunk_.conv1_w, trunk_.conv1_b, trunk_.conv2_w, trunk_.conv2_b,
            trunk_.fc4_w,   trunk_.fc4_b,   fc5_w_,         fc5_b_};
}

std::vector<std::pair<std::string, Tensor>> ClassicalCnnModel::named_parameters() {
    auto out = trunk_.named_parameters();
    out.emplace_back("fc5_w", fc5_w_);
    out.emplace_back("fc5_b", fc5_b_);
    return out;
}

// ---------------------------------------------------------------------------

double Pca1::project_raw(const LabeledImage& img) const {
    if (img.pixels.size() != mean.size()) {
        throw DimensionError("pca1: image has " + std::to_string(img.pixels.size()) +
                             " pixels, projection expects " + std::to_string(mean.size()));
    }
    double acc = 0.0;
    for (size_t i = 0; i < mean.size(); ++i) acc += (img.pixels[i] - mean[i]) * direction[i];
    return acc;
}

double Pca1::project(const LabeledImage& img) const {
    return std::clamp(project_raw(img) * angle_scale, -kPi / 2.0, kPi / 2.0);
}

Pca1 pca1_fit(const std::vector<LabeledImage>& images) {
    if (images.size() < 2) throw DataError("pca1_fit: need at least 2 images");
    const size_t d = images[0].pixels.size();
    const size_t n = images.size();

    Pca1 out;
    out.mean.assign(d, 0.0);
    for (const LabeledImage& img : images) {
        for (size_t i = 0; i < d; ++i) out.mean[i] += img.pixels[i];
    }
    for (double& m : out.mean) m /= static_cast<double>(n);

    std::vector<std::vector<double>> centered(n, std::vector<double>(d));
    for (size_t r = 0; r < n; ++r) {
        for (size_t i = 0; i < d; ++i) centered[r][i] = images[r].pixels[i] - out.mean[i];
    }

    // Deterministic start: the first centered sample, or e0 when degenerate.
    std::vector<double> v = centered[0];
    double norm = 0.0;
    for (double x : v) norm += x * x;
    if (norm < 1e-30) {
        v.assign(d, 0.0);
        v[0] = 1.0;
    } else {
        const double inv = 1.0 / std::sqrt(norm);
        for (double& x : v) x *= inv;
    }

    std::vector<double> next(d);
    constexpr int max_iters = 1000;
    int iter = 0;
    for (; iter < max_iters; ++iter) {
        std::fill(next.begin(), next.end(), 0.0);
        for (size_t r = 0; r < n; ++r) {
            double dot = 0.0;
            for (size_t i = 0; i < d; ++i) dot += centered[r][i] * v[i];
            for (size_t i = 0; i < d; ++i) next[i] += dot * centered[r][i];
        }
        double nn = 0.0;
        for (double x : next) nn += x * x;
        if (nn < 1e-30) break;  // isotropic/zero covariance: keep current v
        const double inv = 1.0 / std::sqrt(nn);
        for (double& x : next) x *= inv;
        double align = 0.0;
        for (size_t i = 0; i < d; ++i) align += next[i] * v[i];
        v = next;
        if (std::abs(1.0 - std::abs(align)) < 1e-10) break;
    }
    if (iter >= max_iters) {
        throw NumericError("pca1_fit: power iteration did not converge after " +
                           std::to_string(max_iters) + " iterations");
    }

    out.direction = v;
    out.iterations = iter + 1;

    double variance = 0.0, max_abs = 0.0;
    for (size_t r = 0; r < n; ++r) {
        double dot = 0.0;
        for (size_t i = 0; i < d; ++i) dot += centered[r][i] * v[i];
        variance += dot * dot;
        max_abs = std::max(max_abs, std::abs(dot));
    }
    out.variance = variance / static_cast<double>(n);
    out.angle_scale = max_abs > 0.0 ? (kPi / 2.0) / max_abs : 1.0;
    return out;
}

// ---------------------------------------------------------------------------

double PegasosResult::decision(std::span<const double> x) const {
    if (x.size() != weights.size()) {
        throw DimensionError("svm decision: feature length " + std::to_string(x.size()) +
                             " vs weights " + std::to_string(weights.size()));
    }
    double acc = bias;
    for (size_t i = 0; i < x.size(); ++i) acc += weights[i] * x[i];
    return acc;
}

PegasosResult svm_train_pegasos(const std::vector<std::vector<double>>& xs, const std::vector<int>& ys,
                                double lambda, int epochs, std::mt19937& rng) {
    if (xs.empty()) throw DataError("svm_train_pegasos: empty training set");
    if (xs.size() != ys.size()) throw UsageError("svm_train_pegasos: feature/label count mismatch");
    for (int y : ys) {
        if (y != -1 && y != 1) throw UsageError("svm_train_pegasos: labels must be -1/+1");
    }
    if (lambda <= 0.0) throw ParameterError("svm_train_pegasos: lambda must be positive");

    const size_t d = xs[0].size();
    PegasosResult out;
    out.weights.assign(d, 0.0);
    out.bias = 0.0;

    std::vector<size_t> order(xs.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;

    long t = 0;
    for (int epoch = 0; epoch < epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        for (size_t i : order) {
            ++t;
            const double eta = 1.0 / (lambda * static_cast<double>(t));
            const double margin = static_cast<double>(ys[i]) * out.decision(xs[i]);
            const double shrink = 1.0 - eta * lambda;
            for (double& w : out.weights) w *= shrink;
            out.bias *= shrink;
            if (margin < 1.0) {
                const double step = eta * static_cast<double>(ys[i]);
                for (size_t j = 0; j < d; ++j) out.weights[j] += step * xs[i][j];
                out.bias += step;
            }
        }
        double hinge = 0.0;
        for (size_t i = 0; i < xs.size(); ++i) {
            hinge += std::max(0.0, 1.0 - static_cast<double>(ys[i]) * out.decision(xs[i]));
        }
        out.epoch_hinge.push_back(hinge / static_cast<double>(xs.size()));
    }
    return out;
}

double quantum_kernel(double x, double y) {
    const Statevector sx = evolve(Statevector{}, RY{2.0 * x});
    const Statevector sy = evolve(Statevector{}, RY{2.0 * y});
    const std::complex<double> overlap = std::conj(sx.amp0) * sy.amp0 + std::conj(sx.amp1) * sy.amp1;
    return std::norm(overlap);
}

KernelMatrix build_quantum_kernel_matrix(const std::vector<double>& angles) {
    KernelMatrix k;
    k.n = static_cast<int>(angles.size());
    k.entries.assign(static_cast<size_t>(k.n) * k.n, 0.0);
    for (int i = 0; i < k.n; ++i) {
        for (int j = i; j < k.n; ++j) {
            const double v = quantum_kernel(angles[static_cast<size_t>(i)], angles[static_cast<size_t>(j)]);
            k.entries[static_cast<size_t>(i) * k.n + j] = v;
            k.entries[static_cast<size_t>(j) * k.n + i] = v;
        }
    }
    return k;
}

LssvmSolution lssvm_solve(const KernelMatrix& kernel, const std::vector<int>& ys, double gamma) {
    if (gamma <= 0.0) throw ParameterError("lssvm_solve: gamma must be positive");
    const int n = kernel.n;
    if (n == 0 || static_cast<int>(ys.size()) != n) {
        throw UsageError("lssvm_solve: kernel size and label count disagree");
    }

    const int m = n + 1;  // [b; alpha]
    std::vector<double> a(static_cast<size_t>(m) * m, 0.0);
    std::vector<double> rhs(static_cast<size_t>(m), 0.0);
    for (int i = 0; i < n; ++i) {
        a[static_cast<size_t>(0) * m + (i + 1)] = 1.0;
        a[static_cast<size_t>(i + 1) * m + 0] = 1.0;
        for (int j = 0; j < n; ++j) {
            a[static_cast<size_t>(i + 1) * m + (j + 1)] = kernel.at(i, j) + (i == j ? 1.0 / gamma : 0.0);
        }
        rhs[static_cast<size_t>(i + 1)] = static_cast<double>(ys[static_cast<size_t>(i)]);
    }
    const std::vector<double> a_orig = a;
    const std::vector<double> rhs_orig = rhs;

    // Gaussian elimination with partial pivoting.
    std::vector<int> perm(static_cast<size_t>(m));
    for (int i = 0; i < m; ++i) perm[static_cast<size_t>(i)] = i;
    for (int col = 0; col < m; ++col) {
        int pivot = col;
        double best = std::abs(a[static_cast<size_t>(col) * m + col]);
        for (int r = col + 1; r < m; ++r) {
            const double cand = std::abs(a[static_cast<size_t>(r) * m + col]);
            if (cand > best) {
                best = cand;
                pivot = r;
            }
        }
        if (best < 1e-12) throw NumericError("lssvm_solve: singular system at column " + std::to_string(col));
        if (pivot != col) {
            for (int c = 0; c < m; ++c) std::swap(a[static_cast<size_t>(pivot) * m + c], a[static_cast<size_t>(col) * m + c]);
            std::swap(rhs[static_cast<size_t>(pivot)], rhs[static_cast<size_t>(col)]);
        }
        const double inv = 1.0 / a[static_cast<size_t>(col) * m + col];
        for (int r = col + 1; r < m; ++r) {
            const double f = a[static_cast<size_t>(r) * m + col] * inv;
            if (f == 0.0) continue;
            a[static_cast<size_t>(r) * m + col] = 0.0;
            for (int c = col + 1; c < m; ++c) a[static_cast<size_t>(r) * m + c] -= f * a[static_cast<size_t>(col) * m + c];
            rhs[static_cast<size_t>(r)] -= f * rhs[static_cast<size_t>(col)];
        }
    }
    std::vector<double> x(static_cast<size_t>(m), 0.0);
    for (int r = m - 1; r >= 0; --r) {
        double acc = rhs[static_cast<size_t>(r)];
        for (int c = r + 1; c < m; ++c) acc -= a[static_cast<size_t>(r) * m + c] * x[static_cast<size_t>(c)];
        x[static_cast<size_t>(r)] = acc / a[static_cast<size_t>(r) * m + r];
    }

    LssvmSolution sol;
    sol.bias = x[0];
    sol.alpha.assign(x.begin() + 1, x.end());
    double residual = 0.0;
    for (int r = 0; r < m; ++r) {
        double acc = -rhs_orig[static_cast<size_t>(r)];
        for (int c = 0; c < m; ++c) acc += a_orig[static_cast<size_t>(r) * m + c] * x[static_cast<size_t>(c)];
        residual = std::max(residual, std::abs(acc));
    }
    sol.residual_inf = residual;
    return sol;
}

// ---------------------------------------------------------------------------

namespace {

std::vector<double> flat_pixels(const LabeledImage& img) {
    return img.pixels;
}

int sign_label(int label01) {
    return label01 == 1 ? 1 : -1;
}

}  // namespace

SvmModel::SvmModel(const std::vector<LabeledImage>& train, double lambda, int epochs,
                   std::uint32_t seed) {
    std::vector<std::vector<double>> xs;
    std::vector<int> ys;
    xs.reserve(train.size());
    ys.reserve(train.size());
    for (const LabeledImage& img : train) {
        xs.push_back(flat_pixels(img));
        ys.push_back(sign_label(img.label));
    }
    std::mt19937 rng(seed);
    result_ = svm_train_pegasos(xs, ys, lambda, epochs, rng);
}

Prediction SvmModel::predict(const LabeledImage& img) const {
    const double f = result_.decision(img.pixels);
    return {f >= 0.0 ? 1 : 0, f};
}

HybridSvmModel::HybridSvmModel(const std::vector<LabeledImage>& train, double gamma) {
    pca_ = pca1_fit(train);
    train_angles_.reserve(train.size());
    std::vector<int> ys;
    ys.reserve(train.size());
    // Half the projection angle: the fidelity kernel cos^2(x - y) has period
    // pi, so raw angles spanning [-pi/2, pi/2] would alias the two extremes
    // onto the same embedding. Halving keeps the feature map injective.
    for (const LabeledImage& img : train) {
        train_angles_.push_back(0.5 * pca_.project(img));
        ys.push_back(sign_label(img.label));
    }
    solution_ = lssvm_solve(build_quantum_kernel_matrix(train_angles_), ys, gamma);
}

Prediction HybridSvmModel::predict(const LabeledImage& img) const {
    const double angle = 0.5 * pca_.project(img);
    double f = solution_.bias;
    for (size_t i = 0; i < train_angles_.size(); ++i) {
        f += solution_.alpha[i] * quantum_kernel(train_angles_[i], angle);
    }
    return {f >= 0.0 ? 1 : 0, f};
}

QnnModel::QnnModel(const std::vector<LabeledImage>& train, long shots, std::uint32_t seed)
    : shots_(shots) {
    pca_ = pca1_fit(train);
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> uni(-kPi, kPi);
    w_ = Tensor({1}, {uni(rng)});
}

Tensor QnnModel::example_loss(Tape& tape, const LabeledImage& img, std::mt19937&,
                              std::uint64_t shot_seed) {
    Tensor log_probs = pure_qnn_op(&tape, pca_.project(img), w_, shots_, shot_seed);
    return nll_scalar(&tape, log_probs, img.label);
}

Prediction QnnModel::predict(const LabeledImage& img) const {
    const auto [p0, p1] = pure_qnn_forward(pca_.project(img), w_.data()[0]);
    return {p1 > p0 ? 1 : 0, p1};
}

std::vector<Tensor> QnnModel::parameters() {
    return {w_};
}

std::vector<std::pair<std::string, Tensor>> QnnModel::named_parameters() {
    return {{"qnn_w", w_}};
}

// ---------------------------------------------------------------------------

void save_checkpoint(const std::string& path,
                     const std::vector<std::pair<std::string, Tensor>>& params) {
    nlohmann::json header = nlohmann::json::array();
    std::vector<std::uint8_t> payload;
    long offset = 0;
    for (const auto& [name, tensor] : params) {
        header.push_back({{"name", name}, {"shape", tensor.shape()}, {"offset", offset}});
        const size_t bytes = static_cast<size_t>(tensor.size()) * sizeof(double);
        const size_t at = payload.size();
        payload.resize(at + bytes);
        std::memcpy(payload.data() + at, tensor.data(), bytes);
        offset += static_cast<long>(bytes);
    }
    const std::string head = nlohmann::json{{"params", header}}.dump() + "\n";
    std::vector<std::uint8_t> file(head.begin(), head.end());
    file.insert(file.end(), payload.begin(), payload.end());
    write_binary_file_atomic(path, file);
}

std::vector<std::pair<std::string, Tensor>> load_checkpoint(const std::string& path) {
    const std::vector<std::uint8_t> bytes = read_binary_file(path);
    const auto nl = std::find(bytes.begin(), bytes.end(), std::uint8_t('\n'));
    if (nl == bytes.end()) throw FormatError("checkpoint missing header line: " + path);
    nlohmann::json header;
    try {
        header = nlohmann::json::parse(std::string(bytes.begin(), nl));
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("checkpoint header is not valid JSON: " + std::string(e.what()));
    }
    const size_t payload_start = static_cast<size_t>(nl - bytes.begin()) + 1;

    std::vector<std::pair<std::string, Tensor>> out;
    for (const auto& entry : header.at("params")) {
        const std::string name = entry.at("name").get<std::string>();
        const std::vector<int> shape = entry.at("shape").get<std::vector<int>>();
        const size_t offset = entry.at("offset").get<size_t>();
        Tensor t(shape);
        const size_t nbytes = static_cast<size_t>(t.size()) * sizeof(double);
        if (payload_start + offset + nbytes > bytes.size()) {
            throw FormatError("checkpoint payload truncated for parameter " + name);
        }
        std::memcpy(t.data(), bytes.data() + payload_start + offset, nbytes);
        out.emplace_back(name, std::move(t));
    }
    return out;
}

void load_parameters(TrainableModel& model,
                     const std::vector<std::pair<std::string, Tensor>>& saved) {
    auto params = model.named_parameters();
    for (auto& [name, target] : params) {
        const auto it = std::find_if(saved.begin(), saved.end(),
                                     [&](const auto& p) { return p.first == name; });
        if (it == saved.end()) throw DataError("checkpoint missing parameter " + name);
        if (it->second.shape() != target.shape()) {
            throw DimensionError("checkpoint parameter " + name + " has shape " +
                                 shape_string(it->second.shape()) + ", model expects " +
                                 shape_string(target.shape()));
        }
        target.values() = it->second.values();
    }
}

}  // namespace cqural
