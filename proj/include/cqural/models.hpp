#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "cqural/adam.hpp"
#include "cqural/data.hpp"
#include "cqural/hybrid_layer.hpp"
#include "cqural/ops.hpp"
#include "cqural/quantum.hpp"
#include "cqural/tensor.hpp"

namespace cqural {

struct Prediction {
    int label = 0;
    double score1 = 0.0;  // class-1 score (probability or decision value)
};

// Common surface so the metrics pipeline treats all five models uniformly.
class BinaryClassifier {
public:
    virtual ~BinaryClassifier() = default;
    virtual Prediction predict(const LabeledImage& img) const = 0;
    virtual std::string name() const = 0;
};

// Epoch-trained models additionally expose a taped per-example loss and
// their parameter list for the optimizer.
class TrainableModel : public BinaryClassifier {
public:
    virtual Tensor example_loss(Tape& tape, const LabeledImage& img, std::mt19937& dropout_rng,
                                std::uint64_t shot_seed) = 0;
    virtual std::vector<Tensor> parameters() = 0;
    virtual std::vector<std::pair<std::string, Tensor>> named_parameters() = 0;
    void zero_grads();
};

struct TapedForward;

// Conv models also expose their conv2 feature maps, which GradCAM and the
// saliency-replay loss differentiate against.
class ConvFeatureModel : public TrainableModel {
public:
    virtual TapedForward forward_features(Tape* tape, const LabeledImage& img, Mode mode,
                                          std::mt19937& dropout_rng, std::uint64_t shot_seed) = 0;
    Tensor example_loss(Tape& tape, const LabeledImage& img, std::mt19937& dropout_rng,
                        std::uint64_t shot_seed) override;
};

// Layer plan: conv1, conv2, drop3, fc4, fc5, then the model-specific head.
// Kernel size 5 reproduces the 32 -> 28 -> 24 feature-map chain on CIFAR
// input; channel and fc widths are sized for CPU runs on 200-sample tasks.
struct CquralConfig {
    int in_channels = 1;
    int in_height = 28;
    int in_width = 28;
    int conv1_channels = 8;
    int conv2_channels = 16;
    int kernel_size = 5;
    int fc4_width = 32;
    double dropout_p = 0.25;
    HeadMode head_mode = HeadMode::amplitude;
    long shots = 0;
    std::uint32_t seed = 0;

    int conv1_out_height() const { return in_height - kernel_size + 1; }
    int conv1_out_width() const { return in_width - kernel_size + 1; }
    int conv2_out_height() const { return conv1_out_height() - kernel_size + 1; }
    int conv2_out_width() const { return conv1_out_width() - kernel_size + 1; }
    int flat_size() const { return conv2_channels * conv2_out_height() * conv2_out_width(); }
};

struct TapedForward {
    Tensor log_probs;       // length 2
    Tensor conv2_features;  // post-relu conv2 maps, 1 x C2 x H' x W' (GradCAM target)
};

// Shared conv trunk. Both conv models draw their trunk weights first from
// the same seeded stream, so equal seeds give bit-identical trunks.
class ConvTrunk {
public:
    ConvTrunk() = default;
    ConvTrunk(const CquralConfig& cfg, std::mt19937& init_rng);

    // Runs input through conv1/relu/conv2/relu; returns the feature maps.
    Tensor features(Tape* tape, const Tensor& input) const;
    // dropout + flatten + fc4 + relu.
    Tensor fc4_activations(Tape* tape, const Tensor& conv_features, Mode mode, double dropout_p,
                           std::mt19937& dropout_rng) const;

    std::vector<std::pair<std::string, Tensor>> named_parameters();
    long parameter_count() const;

    Tensor conv1_w, conv1_b, conv2_w, conv2_b, fc4_w, fc4_b;
};

class CquralModel : public ConvFeatureModel {
public:
    explicit CquralModel(const CquralConfig& cfg);

    TapedForward forward_features(Tape* tape, const LabeledImage& img, Mode mode,
                                  std::mt19937& dropout_rng, std::uint64_t shot_seed) override;
    Prediction predict(const LabeledImage& img) const override;
    std::vector<Tensor> parameters() override;
    std::vector<std::pair<std::string, Tensor>> named_parameters() override;
    std::string name() const override { return "cqural"; }
    const CquralConfig& config() const { return cfg_; }

private:
    CquralConfig cfg_;
    ConvTrunk trunk_;
    Tensor fc5_w_, fc5_b_;
    Tensor head_w_;  // amplitude mode only
};

class ClassicalCnnModel : public ConvFeatureModel {
public:
    explicit ClassicalCnnModel(const CquralConfig& cfg);

    TapedForward forward_features(Tape* tape, const LabeledImage& img, Mode mode,
                                  std::mt19937& dropout_rng, std::uint64_t shot_seed) override;
    Prediction predict(const LabeledImage& img) const override;
    std::vector<Tensor> parameters() override;
    std::vector<std::pair<std::string, Tensor>> named_parameters() override;
    std::string name() const override { return "cnn"; }
    const CquralConfig& config() const { return cfg_; }

private:
    CquralConfig cfg_;
    ConvTrunk trunk_;
    Tensor fc5_w_, fc5_b_;
};

// ---------------------------------------------------------------------------
// PCA-1 scalar features for the single-qubit baselines.

struct Pca1 {
    std::vector<double> mean;
    std::vector<double> direction;  // unit vector
    double angle_scale = 1.0;       // maps raw projections into [-pi/2, pi/2]
    double variance = 0.0;          // captured variance along direction
    int iterations = 0;

    double project_raw(const LabeledImage& img) const;
    double project(const LabeledImage& img) const;  // clamped angle
};

// Top principal direction by power iteration (tol 1e-10, max 1000 iters).
Pca1 pca1_fit(const std::vector<LabeledImage>& images);

// ---------------------------------------------------------------------------
// Linear SVM (Pegasos) and the quantum-kernel LS-SVM baseline.

struct PegasosResult {
    std::vector<double> weights;
    double bias = 0.0;
    std::vector<double> epoch_hinge;  // mean hinge loss after each epoch

    double decision(std::span<const double> x) const;
};

// Primal hinge-loss SGD with the Pegasos 1/(lambda*t) schedule. Labels must
// be -1/+1.
PegasosResult svm_train_pegasos(const std::vector<std::vector<double>>& xs, const std::vector<int>& ys,
                                double lambda, int epochs, std::mt19937& rng);

// Fidelity kernel of the RY(2t)|0> embedding; equals cos^2(x - y).
double quantum_kernel(double x, double y);

struct KernelMatrix {
    int n = 0;
    std::vector<double> entries;  // row-major n x n

    double at(int i, int j) const { return entries[static_cast<size_t>(i) * n + j]; }
};

KernelMatrix build_quantum_kernel_matrix(const std::vector<double>& angles);

struct LssvmSolution {
    std::vector<double> alpha;
    double bias = 0.0;
    double residual_inf = 0.0;
};

// Solves the LS-SVM system [[0, 1^T], [1, K + I/gamma]] [b; alpha] = [0; y]
// by Gaussian elimination with partial pivoting.
LssvmSolution lssvm_solve(const KernelMatrix& kernel, const std::vector<int>& ys, double gamma);

// ---------------------------------------------------------------------------
// Baseline classifier wrappers.

class SvmModel : public BinaryClassifier {
public:
    SvmModel(const std::vector<LabeledImage>& train, double lambda, int epochs, std::uint32_t seed);
    Prediction predict(const LabeledImage& img) const override;
    std::string name() const override { return "svm"; }
    const PegasosResult& result() const { return result_; }

private:
    PegasosResult result_;
};

class HybridSvmModel : public BinaryClassifier {
public:
    HybridSvmModel(const std::vector<LabeledImage>& train, double gamma);
    Prediction predict(const LabeledImage& img) const override;
    std::string name() const override { return "hybrid_svm"; }
    const LssvmSolution& solution() const { return solution_; }

private:
    Pca1 pca_;
    std::vector<double> train_angles_;
    LssvmSolution solution_;
};

class QnnModel : public TrainableModel {
public:
    QnnModel(const std::vector<LabeledImage>& train, long shots, std::uint32_t seed);

    Tensor example_loss(Tape& tape, const LabeledImage& img, std::mt19937& dropout_rng,
                        std::uint64_t shot_seed) override;
    Prediction predict(const LabeledImage& img) const override;
    std::vector<Tensor> parameters() override;
    std::vector<std::pair<std::string, Tensor>> named_parameters() override;
    std::string name() const override { return "qnn"; }
    double rotation() const { return w_.data()[0]; }

private:
    Pca1 pca_;
    Tensor w_;
    long shots_ = 0;
};

// ---------------------------------------------------------------------------
// Checkpoints: compact JSON header (name, shape, offset) on the first line,
// then little-endian 64-bit reals.

void save_checkpoint(const std::string& path,
                     const std::vector<std::pair<std::string, Tensor>>& params);
std::vector<std::pair<std::string, Tensor>> load_checkpoint(const std::string& path);
void load_parameters(TrainableModel& model,
                     const std::vector<std::pair<std::string, Tensor>>& saved);

}  // namespace cqural
