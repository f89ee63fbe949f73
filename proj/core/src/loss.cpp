#include "softlabel/loss.hpp"

#include <algorithm>
#include <cmath>

#include "softlabel/error.hpp"

namespace softlabel {

namespace {

double floored_log(double p) { return std::log(std::max(p, kProbFloor)); }

// d/dp log max(p, eps)
double floored_log_grad(double p) { return p > kProbFloor ? 1.0 / p : 0.0; }

// KL(p || t) with t floored, used by KlDirection::PredictionFirst.
double reverse_kl(std::span<const double> p, std::span<const double> t) {
    double s = 0.0;
    for (std::size_t j = 0; j < p.size(); ++j)
        if (p[j] > 0.0) s += p[j] * (floored_log(p[j]) - floored_log(t[j]));
    return s;
}

}  // namespace

void LossConfig::validate(std::size_t num_tasks) const {
    if (alpha < 0 || beta < 0) throw UsageError("loss: alpha and beta must be >= 0");
    if (!task_lambdas.empty()) {
        if (task_lambdas.size() != num_tasks)
            throw UsageError("loss: expected " + std::to_string(num_tasks) + " task lambdas");
        for (double l : task_lambdas)
            if (l < 0) throw UsageError("loss: task lambdas must be >= 0");
    }
    if (!class_weights.empty() && class_weights.size() != num_tasks)
        throw UsageError("loss: class weights given for a different number of tasks");
}

std::vector<double> softmax(std::span<const double> logits) {
    std::vector<double> out(logits.size());
    if (logits.empty()) return out;
    const double m = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        out[i] = std::exp(logits[i] - m);
        sum += out[i];
    }
    for (auto& v : out) v /= sum;
    return out;
}

double loss_ce(std::span<const double> p, int silver, double weight) {
    return -weight * floored_log(p[static_cast<std::size_t>(silver)]);
}

double kl_divergence(std::span<const double> t, std::span<const double> p) {
    double kl = 0.0;
    for (std::size_t j = 0; j < t.size(); ++j)
        if (t[j] > 0.0) kl += t[j] * (std::log(t[j]) - floored_log(p[j]));
    return kl;
}

std::vector<double> kl_target(std::span<const double> soft, bool softmax_targets) {
    return softmax_targets ? softmax(soft) : std::vector<double>(soft.begin(), soft.end());
}

double loss_klnll(std::span<const double> p, std::span<const double> soft, int silver,
                  const LossConfig& cfg, double weight) {
    const auto t = kl_target(soft, cfg.softmax_targets);
    const double kl = cfg.kl_direction == KlDirection::TargetFirst ? kl_divergence(t, p)
                                                                   : reverse_kl(p, t);
    return cfg.alpha * kl + cfg.beta * loss_ce(p, silver, weight);
}

double sample_loss(std::span<const double> p, std::span<const double> soft, int silver,
                   const LossConfig& cfg, double weight) {
    return cfg.kind == LossKind::CE ? loss_ce(p, silver, weight)
                                    : loss_klnll(p, soft, silver, cfg, weight);
}

double sample_loss_grad(std::span<const double> p, std::span<const double> soft, int silver,
                        const LossConfig& cfg, double weight, std::span<double> grad) {
    const std::size_t k = p.size();
    std::vector<double> dp(k, 0.0);
    const auto s = static_cast<std::size_t>(silver);
    const double nll_scale = cfg.kind == LossKind::CE ? 1.0 : cfg.beta;
    dp[s] += -nll_scale * weight * floored_log_grad(p[s]);

    if (cfg.kind == LossKind::KLNLL && cfg.alpha != 0.0) {
        const auto t = kl_target(soft, cfg.softmax_targets);
        for (std::size_t j = 0; j < k; ++j) {
            if (cfg.kl_direction == KlDirection::TargetFirst) {
                if (t[j] > 0.0) dp[j] += -cfg.alpha * t[j] * floored_log_grad(p[j]);
            } else if (p[j] > 0.0) {
                // d/dp [p log max(p,eps)] = log max(p,eps) + p * floored_log_grad(p)
                dp[j] += cfg.alpha * (floored_log(p[j]) + p[j] * floored_log_grad(p[j]) -
                                      floored_log(t[j]));
            }
        }
    }

    // softmax Jacobian: dz_k = p_k (dp_k - sum_j p_j dp_j)
    double dot = 0.0;
    for (std::size_t j = 0; j < k; ++j) dot += p[j] * dp[j];
    for (std::size_t j = 0; j < k; ++j) grad[j] = p[j] * (dp[j] - dot);
    return sample_loss(p, soft, silver, cfg, weight);
}

double loss_multitask(std::span<const double> task_losses, std::span<const double> lambdas) {
    if (task_losses.size() != lambdas.size())
        throw UsageError("loss_multitask: one lambda per task required");
    double total = 0.0;
    for (std::size_t t = 0; t < task_losses.size(); ++t) total += lambdas[t] * task_losses[t];
    return total;
}

}  // namespace softlabel
