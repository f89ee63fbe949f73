#pragma once

#include <span>
#include <vector>

namespace softlabel {

inline constexpr double kProbFloor = 1e-12;

enum class LossKind { CE, KLNLL };

/// Argument order of the divergence term. TargetFirst computes KL(t || p),
/// which pulls predictions toward the annotation distribution;
/// PredictionFirst computes KL(p || t).
enum class KlDirection { TargetFirst, PredictionFirst };

struct LossConfig {
    LossKind kind = LossKind::KLNLL;
    double alpha = 1.0;
    double beta = 0.2;
    bool softmax_targets = true;
    KlDirection kl_direction = KlDirection::TargetFirst;
    /// Per task, per category. Empty means unit weights.
    std::vector<std::vector<double>> class_weights;
    /// lambda_t per task. Empty means 1 for every task.
    std::vector<double> task_lambdas;

    double lambda(std::size_t task) const {
        return task_lambdas.empty() ? 1.0 : task_lambdas.at(task);
    }
    double weight(std::size_t task, int category) const {
        if (class_weights.empty() || class_weights.at(task).empty()) return 1.0;
        return class_weights.at(task).at(static_cast<std::size_t>(category));
    }
    void validate(std::size_t num_tasks) const;
};

std::vector<double> softmax(std::span<const double> logits);

/// -w * log max(p[silver], eps)
double loss_ce(std::span<const double> p, int silver, double weight);

/// KL(t || p) = sum_j t_j (log t_j - log p_j), with 0 log 0 = 0 and p floored at eps.
double kl_divergence(std::span<const double> t, std::span<const double> p);

/// The distribution the KL term is measured against: softmax(soft) or soft itself.
std::vector<double> kl_target(std::span<const double> soft, bool softmax_targets);

/// alpha * KL + beta * (-w log p[silver]). Class weights only scale the NLL term.
double loss_klnll(std::span<const double> p, std::span<const double> soft, int silver,
                  const LossConfig& cfg, double weight);

/// Per-sample loss of the configured kind for one task.
double sample_loss(std::span<const double> p, std::span<const double> soft, int silver,
                   const LossConfig& cfg, double weight);

/// d(sample_loss)/d(logits), where p = softmax(logits). Writes into grad
/// (same size as p) and returns the loss value.
double sample_loss_grad(std::span<const double> p, std::span<const double> soft, int silver,
                        const LossConfig& cfg, double weight, std::span<double> grad);

/// sum_t lambda_t * L_t
double loss_multitask(std::span<const double> task_losses, std::span<const double> lambdas);

}  // namespace softlabel
