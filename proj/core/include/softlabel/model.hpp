#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "softlabel/annotations.hpp"
#include "softlabel/loss.hpp"
#include "softlabel/rng.hpp"

namespace softlabel {

struct TaskSpec {
    Attribute attribute;
    std::size_t num_categories;
};

struct ModelConfig {
    std::size_t encoder_dim = 4096;
    std::size_t hidden_dim = 64;
    std::size_t intermediate_dim = 364;
    std::vector<TaskSpec> tasks;
    double dropout_p = 0.2;
    double leaky_relu_slope = 0.01;

    void validate() const;
    /// Index of the head for an attribute, or -1.
    int task_index(Attribute a) const;

    /// Three heads: Aggression (3), Target (2), Type (3).
    static ModelConfig multitask();
    static ModelConfig single(Attribute a);
};

/// Row-major dense matrix; biases are 1 x n.
struct Tensor {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> values;

    Tensor() = default;
    Tensor(std::size_t r, std::size_t c) : rows(r), cols(c), values(r * c, 0.0) {}

    double& operator()(std::size_t r, std::size_t c) { return values[r * cols + c]; }
    double operator()(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
    std::size_t size() const { return values.size(); }
    bool operator==(const Tensor&) const = default;
};

struct HeadParams {
    Tensor weight;  // intermediate_dim x num_categories
    Tensor bias;    // 1 x num_categories
    bool operator==(const HeadParams&) const = default;
};

struct ModelParams {
    Tensor encoder_weight;  // encoder_dim x hidden_dim
    Tensor encoder_bias;
    Tensor trunk_weight;    // hidden_dim x intermediate_dim
    Tensor trunk_bias;
    std::vector<HeadParams> heads;

    /// All-zero tensors shaped for config.
    static ModelParams zeros(const ModelConfig& config);
    /// Glorot-uniform matrices, zero biases.
    static ModelParams initialize(const ModelConfig& config, Rng& rng);

    /// Visits tensors in declaration order. head is -1 for shared tensors.
    void for_each_tensor(const std::function<void(std::string_view name, int head, Tensor&)>& fn);
    void for_each_tensor(const std::function<void(std::string_view name, int head, const Tensor&)>& fn) const;

    std::size_t parameter_count() const;
    bool all_finite() const;
    bool operator==(const ModelParams&) const = default;
};

/// Sparse encoder output: sorted indices with their values.
struct Features {
    std::size_t dim = 0;
    std::vector<std::uint32_t> indices;
    std::vector<double> values;

    std::vector<double> dense() const;
    double norm() const;
};

/// Hashed bag-of-tokens: each whitespace token adds a signed unit count in
/// one of encoder_dim buckets; the result is L2-normalized (zero for no tokens).
Features encode(std::string_view normalized_text, std::size_t encoder_dim);
Features from_dense(std::span<const double> dense);

enum class Mode { Train, Eval };

/// One training or evaluation item: features plus per-task targets, in the
/// order of ModelConfig::tasks.
struct Sample {
    std::string id;
    Features features;
    std::vector<std::vector<double>> soft;
    std::vector<int> silver;
};

/// Per-task probability vectors. Dropout is applied in Train mode only, using
/// inverted scaling, with one rng draw per intermediate unit.
std::vector<std::vector<double>> forward(const ModelParams& params, const Features& features,
                                         const ModelConfig& config, Mode mode, Rng& rng);

/// Eval-mode argmax per task.
std::vector<int> predict(const ModelParams& params, const Features& features, const ModelConfig& config,
                         std::vector<std::vector<double>>* probabilities = nullptr);

struct BatchLoss {
    double total = 0.0;              // sum_t lambda_t * task_losses[t]
    std::vector<double> task_losses;  // mean over the batch, unweighted by lambda
};

/// Configured batch loss without gradients. rng is taken by value so repeated
/// calls with the same generator see the same dropout masks.
BatchLoss batch_loss(const ModelParams& params, std::span<const Sample> batch, const LossConfig& loss,
                     const ModelConfig& config, Mode mode, Rng rng);

struct Gradients {
    ModelParams grads;
    BatchLoss loss;
};

/// Exact gradients of batch_loss with respect to every parameter. Throws
/// NumericError if the loss is not finite.
Gradients backward(const ModelParams& params, std::span<const Sample> batch, const LossConfig& loss,
                   const ModelConfig& config, Mode mode, Rng rng);

}  // namespace softlabel
