#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "softlabel/annotations.hpp"
#include "softlabel/evaluation.hpp"
#include "softlabel/model.hpp"
#include "softlabel/optimizer.hpp"

namespace softlabel {

enum class Regime { Single, Multitask };

struct TrainConfig {
    double learning_rate = 1e-2;
    /// Overrides of the head learning rate, keyed by attribute.
    std::map<Attribute, double> head_learning_rates;
    std::size_t batch_size = 20;
    std::size_t epochs = 20;
    std::uint64_t seed = 1;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    double weight_decay = 0.01;
    LossConfig loss;
    /// lambda_t keyed by attribute; missing tasks use 1.
    std::map<Attribute, double> task_lambdas;
    bool use_class_weights = true;
    Regime regime = Regime::Multitask;
    Attribute task = Attribute::Type;  // used by Regime::Single

    void validate() const;
    ModelConfig model_config(const ModelConfig& base) const;

    /// Selected single-task hyperparameters of the pretrained-encoder setup:
    /// lr 2e-5, batch 20; CE epochs 3/5/3; KLNLL epochs 3/2/2, alpha 1, beta 0.5/0.2/0.2.
    static TrainConfig pretrained_single_task(Attribute task, LossKind kind);
    /// Multitask counterpart: CE 3 epochs, KLNLL 2 epochs with lambdas (0.2, 0.2, 1)
    /// and a 2.5e-5 learning rate on the Aggression head.
    static TrainConfig pretrained_multitask(LossKind kind);
};

struct SplitSpec {
    double train_fraction = 0.8;
    std::size_t folds = 4;
    std::uint64_t seed = 1;
    void validate() const;
};

/// Seeded shuffle then prefix split; train size is round(n * fraction)
/// clamped to [1, n-1]. Returns (train indices, test indices).
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(std::size_t n, const SplitSpec& spec);

/// k disjoint folds covering 0..n-1 after a seeded shuffle; sizes differ by at
/// most one, the first n % k folds taking the extra item.
std::vector<std::vector<std::size_t>> make_folds(std::size_t n, std::size_t k, std::uint64_t seed);

/// Features from normalized text plus per-task targets, in model task order.
/// texts maps tweet id to normalized text.
std::vector<Sample> build_samples(std::span<const LabeledExample> examples,
                                  const std::unordered_map<std::string, std::string>& texts,
                                  const ModelConfig& config);

/// Per-task silver counts over samples.
std::vector<std::vector<std::size_t>> silver_counts(std::span<const Sample> samples, const ModelConfig& config);

struct EpochRecord {
    std::size_t epoch = 0;
    std::vector<double> task_losses;
    double combined = 0.0;
};

struct TrainResult {
    ModelParams params;
    std::vector<EpochRecord> history;
    LossConfig loss;  // resolved: class weights and lambdas filled in
    bool diverged = false;
    std::string diagnostic;
};

/// Mini-batch AdamW training. Heads whose lambda is 0 are frozen. A
/// non-finite loss stops training and returns the last good parameters with
/// diverged set.
TrainResult train(std::span<const Sample> train_set, const TrainConfig& cfg, const ModelConfig& model);

/// Resolved loss configuration for a model: lambdas per task and, if enabled,
/// class weights computed on train_set. Throws DataError when a category is absent.
LossConfig resolve_loss(std::span<const Sample> train_set, const TrainConfig& cfg, const ModelConfig& model);

std::vector<TaskPredictions> predict_all(const ModelParams& params, std::span<const Sample> samples,
                                         const ModelConfig& model);
std::vector<TaskPredictions> gold_labels(std::span<const Sample> samples, const ModelConfig& model);

nlohmann::json to_json(const EpochRecord& record, const ModelConfig& model);

/// Candidate values; an empty list keeps the base configuration's value.
struct TuneGrid {
    std::vector<double> learning_rates;
    std::vector<std::size_t> batch_sizes;
    std::vector<std::size_t> epochs;
    std::vector<double> alphas;
    std::vector<double> betas;
    /// Candidate lambda values, combined as a Cartesian product over the model's tasks.
    std::vector<double> lambdas;
    /// Candidate learning rates of the Aggression head.
    std::vector<double> aggression_head_lrs;

    /// Cartesian product in fixed nesting order: lr, batch, epochs, alpha, beta,
    /// lambdas (first task outermost), Aggression head lr.
    std::vector<TrainConfig> enumerate(const TrainConfig& base, const ModelConfig& model) const;
};

struct GridScore {
    TrainConfig config;
    std::vector<double> task_f1;  // mean over folds, model task order
    double score = 0.0;           // Single: that task's F1; Multitask: mean over tasks
};

struct TuneResult {
    std::vector<GridScore> scores;
    std::size_t best = 0;
    const GridScore& best_score() const { return scores.at(best); }
};

/// k-fold cross-validated grid search on train_set; ties go to the earliest grid point.
/// jobs > 1 evaluates grid points concurrently with identical results.
TuneResult kfold_tune(std::span<const Sample> train_set, const TrainConfig& base, const TuneGrid& grid,
                      const SplitSpec& spec, const ModelConfig& model, std::size_t jobs = 1);

/// Runs fn(i) for i in [0, n) on up to jobs threads.
void parallel_for(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)>& fn);

}  // namespace softlabel
