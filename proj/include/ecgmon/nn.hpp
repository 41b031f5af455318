#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "ecgmon/rng.hpp"

namespace ecgmon {

// Dense row-major matrix (rows x cols).
struct Tensor2 {
    std::size_t rows = 0, cols = 0;
    std::vector<double> data;

    Tensor2() = default;
    Tensor2(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

    double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
    double* row(std::size_t r) { return data.data() + r * cols; }
    const double* row(std::size_t r) const { return data.data() + r * cols; }
};

struct DenseLayer {
    std::size_t in = 0, out = 0;
    Tensor2 weights;  // out x in
    std::vector<double> bias;
};

struct BatchNormLayer {
    std::vector<double> gamma, beta;
    std::vector<double> running_mean, running_var;
    double momentum = 0.9;  // fraction of the old running statistic kept
    double eps = 1e-5;
};

// One hidden block: dense -> batchnorm -> ReLU -> dropout.
struct HiddenBlock {
    DenseLayer dense;
    BatchNormLayer norm;
    double dropout_rate = 0.3;
};

// Binary MLP classifier with a single sigmoid output unit. The default
// architecture has seven hidden blocks (256-128-64-32-16-8-4); any block
// count >= 1 is a valid model.
struct MlpModel {
    std::vector<HiddenBlock> blocks;
    DenseLayer output;

    std::size_t input_dim() const {
        return blocks.empty() ? output.in : blocks.front().dense.in;
    }

    // He-uniform init for hidden layers, Glorot-uniform for the output,
    // gamma 1 / beta 0 / running stats (0, 1). Deterministic in `seed`.
    static MlpModel create(std::size_t input_dim, const std::vector<std::size_t>& hidden_widths,
                           double dropout_rate, std::uint64_t seed);

    static const std::vector<std::size_t>& default_widths();  // {256,...,4}
};

enum class RunMode { Train, Infer };

struct BlockCache {
    Tensor2 input;      // activation entering the block
    std::vector<double> mean, var, inv_std;  // batch statistics (train mode)
    Tensor2 xhat;       // normalized pre-activation
    Tensor2 bn_out;     // gamma * xhat + beta
    Tensor2 drop_mask;  // multiplicative dropout mask (1/(1-p) or 0)
    Tensor2 out;        // block output
};

struct ForwardCache {
    RunMode mode = RunMode::Infer;
    std::vector<BlockCache> blocks;
    Tensor2 output_input;
    std::vector<double> logits;
    std::vector<double> probabilities;
};

// Forward pass. Train mode uses batch statistics (requires batch size >= 2,
// "degenerate-batch" otherwise), updates running statistics, and applies
// inverted dropout driven by `dropout_rng` (required then). Infer mode uses
// running statistics and ignores dropout. Wrong input width raises
// "shape-error".
ForwardCache forward(MlpModel& model, const Tensor2& batch, RunMode mode,
                     Rng* dropout_rng = nullptr);

// Mean binary cross-entropy with probabilities clamped to
// [1e-12, 1 - 1e-12].
double bce_loss(const std::vector<double>& probabilities, const std::vector<int>& labels);

struct LayerGrads {
    Tensor2 weights;
    std::vector<double> bias;
};

struct BlockGrads {
    LayerGrads dense;
    std::vector<double> gamma, beta;
};

struct Gradients {
    std::vector<BlockGrads> blocks;
    LayerGrads output;
};

// Backpropagation through the cached train-mode forward pass; returns
// gradients of the mean BCE loss for every trainable parameter.
Gradients backward(const MlpModel& model, const ForwardCache& cache,
                   const std::vector<int>& labels);

// Central-difference check of backward() against the train-mode loss with a
// frozen dropout mask (the RNG is re-seeded identically for every forward
// evaluation). Returns the maximum relative error over all parameters,
// rel = |analytic - numeric| / max(|analytic|, |numeric|, 1e-3).
double gradient_check(MlpModel model, const Tensor2& batch, const std::vector<int>& labels,
                      double epsilon, std::uint64_t mask_seed = 7);

struct PlateauConfig {
    double factor = 0.5;
    int patience = 5;
    double min_lr = 1e-5;
    double min_delta = 1e-4;
};

struct EarlyStopConfig {
    int patience = 10;
    bool restore_best = true;
    double min_delta = 1e-4;
};

struct AdamConfig {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct TrainConfig {
    double initial_lr = 1e-3;
    std::size_t batch_size = 32;
    int max_epochs = 200;
    PlateauConfig plateau{};
    EarlyStopConfig early_stop{};
    AdamConfig adam{};
    std::uint64_t seed = 0;
};

struct EpochMetrics {
    int epoch = 0;  // 1-based
    double train_loss = 0.0, train_accuracy = 0.0;
    double val_loss = 0.0, val_accuracy = 0.0;
    double val_auc = 0.0;  // NaN when the validation split has one class
    double lr = 0.0;       // learning rate used during this epoch
};

using MetricsLog = std::vector<EpochMetrics>;

// Mini-batch Adam training with seeded shuffling and dropout, the
// reduce-on-plateau schedule, and early stopping. Trailing mini-batches of
// size < 2 are skipped (batch normalization needs two samples). When
// `restore_best` is set the returned model carries the parameters of the
// epoch with the minimum validation loss.
MetricsLog fit(MlpModel& model, const Tensor2& x_train, const std::vector<int>& y_train,
               const Tensor2& x_val, const std::vector<int>& y_val, const TrainConfig& config);

// Inference helpers (infer-mode forward; no RNG involved).
std::vector<double> predict_proba(MlpModel& model, const Tensor2& batch);
std::vector<int> predict(MlpModel& model, const Tensor2& batch, double threshold = 0.5);

// Weights file ("MLPW"): magic, format version, layer count, per-layer dims +
// row-major little-endian doubles (+ batchnorm parameter block for hidden
// layers), CRC-32 trailer. Bad magic / CRC -> "format-error"; unknown
// version -> "version-error". A save/load round trip reproduces inference
// outputs bit-exactly.
void save_weights(const MlpModel& model, const std::filesystem::path& path);
MlpModel load_weights(const std::filesystem::path& path);

}  // namespace ecgmon
