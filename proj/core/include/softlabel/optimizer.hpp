#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "softlabel/model.hpp"

namespace softlabel {

struct AdamWConfig {
    double learning_rate = 1e-2;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    double weight_decay = 0.01;
    /// Learning rate per head index, replacing learning_rate for that head.
    std::map<int, double> head_learning_rates;
    /// Heads excluded from updates entirely (no adaptive step, no decay).
    std::vector<int> frozen_heads;

    double rate_for(int head) const;
    bool is_frozen(int head) const;
};

/// First and second moments, one buffer per tensor in for_each_tensor order.
struct OptimizerState {
    std::vector<std::vector<double>> first_moment;
    std::vector<std::vector<double>> second_moment;
    std::uint64_t step = 0;

    static OptimizerState for_params(const ModelParams& params);
};

/// One decoupled-weight-decay Adam update:
///   theta <- theta - lr * wd * theta
///   m <- b1 m + (1 - b1) g,  v <- b2 v + (1 - b2) g^2
///   theta <- theta - lr * (m / (1 - b1^t)) / (sqrt(v / (1 - b2^t)) + eps)
/// Throws NumericError on non-finite gradients and DataError on shape mismatch.
void adamw_step(ModelParams& params, const ModelParams& grads, OptimizerState& state, const AdamWConfig& cfg);

/// Scalar form of the same update, used by tests and benchmarks.
struct ScalarAdamW {
    double m = 0.0, v = 0.0;
    std::uint64_t step = 0;
    double update(double theta, double grad, const AdamWConfig& cfg);
};

}  // namespace softlabel
