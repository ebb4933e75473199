#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "iwsn/rng.hpp"

namespace iwsn {

/// Fully connected layer computing y = x W + b with W stored row-major as
/// inputs x outputs.
struct DenseLayer {
    std::size_t inputs = 0;
    std::size_t outputs = 0;
    std::vector<double> weights;
    std::vector<double> bias;

    double& w(std::size_t j, std::size_t k) noexcept { return weights[j * outputs + k]; }
    double w(std::size_t j, std::size_t k) const noexcept { return weights[j * outputs + k]; }

    friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

/// Dense layers separated by ReLU. dims = [input_len, h1, ..., classes].
struct MlpModel {
    std::vector<std::size_t> dims;
    std::vector<DenseLayer> layers;
    std::uint64_t seed = 0;

    std::size_t input_len() const noexcept { return dims.empty() ? 0 : dims.front(); }
    std::size_t classes() const noexcept { return dims.empty() ? 0 : dims.back(); }
    bool all_finite() const noexcept;

    friend bool operator==(const MlpModel&, const MlpModel&) = default;
};

/// Default topology [feature_len, 64, 16, classes].
std::vector<std::size_t> default_mlp_dims(std::size_t feature_len, std::size_t classes);

/// Weights uniform in +-sqrt(6 / (fan_in + fan_out)), biases zero.
MlpModel make_mlp(const std::vector<std::size_t>& dims, std::uint64_t seed);
MlpModel zero_mlp(const std::vector<std::size_t>& dims);

std::vector<double> mlp_forward(const MlpModel& model, std::span<const double> features);

/// Single-precision copy of a model for the inference path.
struct MlpModelF32 {
    std::vector<std::size_t> dims;
    std::vector<std::vector<float>> weights;
    std::vector<std::vector<float>> bias;
};
MlpModelF32 to_f32(const MlpModel& model);
std::vector<float> mlp_forward_f32(const MlpModelF32& model, std::span<const float> features);

/// -log softmax(scores)[target], computed with the max-shift.
double softmax_cross_entropy(std::span<const double> scores, std::size_t target);
std::vector<double> softmax(std::span<const double> scores);

/// Index of the largest score; ties go to the lowest index.
std::size_t argmax(std::span<const double> scores);

struct Gradients {
    std::vector<std::vector<double>> weights;  // same layout as DenseLayer::weights
    std::vector<std::vector<double>> bias;

    static Gradients zeros_like(const MlpModel& model);
    /// this += other, element by element in storage order.
    void accumulate(const Gradients& other);
    void scale(double s);
};

/// Gradient of the softmax cross-entropy loss for one sample. The loss is
/// written to *loss when non-null.
Gradients mlp_backward(const MlpModel& model, std::span<const double> features, std::size_t target,
                       double* loss = nullptr);

/// Contiguous row-major feature matrix with one label per row.
struct Dataset {
    std::size_t dim = 0;
    std::vector<double> features;
    std::vector<std::size_t> labels;

    std::size_t size() const noexcept { return labels.size(); }
    std::span<const double> row(std::size_t i) const noexcept { return {features.data() + i * dim, dim}; }
    void push(std::span<const double> x, std::size_t label);
};

struct TrainConfig {
    double learning_rate = 0.001;
    double momentum = 0.9;
    int epochs = 200;
    std::size_t batch_size = 32;
    // Mini-batches per epoch; 0 means one full pass over the shuffled data.
    std::size_t steps_per_epoch = 0;
    std::uint64_t seed = 0;

    void validate() const;
};

struct TrainResult {
    MlpModel model;
    std::vector<double> loss_history;  // mean batch loss per epoch
};

/// Mini-batch SGD with momentum: v <- momentum * v - lr * grad, p <- p + v.
///
/// Each epoch reshuffles the sample order with an Rng seeded once from
/// config.seed. Batch gradients are per-sample gradients summed in batch order
/// and divided by the batch size. Throws NumericError naming the step if the
/// loss becomes non-finite.
TrainResult train(MlpModel model, const Dataset& data, const TrainConfig& config);

/// Sample order used by train() for one epoch: the previous order shuffled in
/// place. Exposed so alternative trainers can replay the same batches.
void next_epoch_order(Rng& rng, std::vector<std::size_t>& order);

/// Binary model file: magic "IWSNML01", version byte, layer-dim count and dims
/// as u64 LE, seed as u64 LE, then per layer the weights (inputs x outputs,
/// row-major) and biases as f64 LE.
void save_model(const MlpModel& model, const std::string& path);
MlpModel load_model(const std::string& path);
std::vector<std::uint8_t> encode_model(const MlpModel& model);
MlpModel decode_model(std::span<const std::uint8_t> bytes);

}  // namespace iwsn
