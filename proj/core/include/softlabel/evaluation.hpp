#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "softlabel/annotations.hpp"

namespace softlabel {

/// Gold in rows, prediction in columns.
class ConfusionMatrix {
public:
    explicit ConfusionMatrix(std::size_t categories = 0) : k_(categories), counts_(categories * categories, 0) {}
    static ConfusionMatrix from_rows(const std::vector<std::vector<std::size_t>>& rows);
    static ConfusionMatrix from_labels(std::span<const int> gold, std::span<const int> predicted,
                                       std::size_t categories);

    void add(int gold, int predicted, std::size_t count = 1);
    std::size_t operator()(std::size_t gold, std::size_t predicted) const { return counts_[gold * k_ + predicted]; }
    std::size_t categories() const { return k_; }
    std::size_t total() const;

private:
    std::size_t k_;
    std::vector<std::size_t> counts_;
};

struct PRF {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

struct MacroPRF {
    std::vector<PRF> per_category;
    PRF macro;
};

/// Per-category P, R, F1 with 0/0 defined as 0, and their unweighted means.
MacroPRF macro_prf(const ConfusionMatrix& cm);

/// Winner of a two-way tie between categories a and b of an attribute:
/// the less severe option in every listed pair.
int pairwise_tie_winner(Attribute attribute, int a, int b);

struct EnsembleOutcome {
    std::vector<int> winners;
    std::size_t pairwise_ties = 0;
    /// Ties among three or more leaders, resolved by cascading the pairwise rule.
    std::size_t cascaded_ties = 0;
};

/// Plurality over per-seed predictions for each tweet, ties broken with the
/// pairwise rule. votes[i] lists tweet i's predicted category per seed.
EnsembleOutcome ensemble_vote(Attribute attribute, std::span<const std::vector<int>> votes);
int ensemble_vote_one(Attribute attribute, std::span<const int> seed_votes, int* leaders = nullptr);

/// Tweets predicted Not Aggressive with a non-neutral Target or Type.
std::size_t contradiction_count(std::span<const int> aggression, std::span<const int> target,
                                std::span<const int> type);

struct TaskPredictions {
    Attribute attribute;
    std::vector<int> predicted;
};

struct TaskReport {
    Attribute attribute;
    std::vector<std::string> categories;
    ConfusionMatrix confusion;
    MacroPRF metrics;
};

struct MetricsReport {
    std::size_t samples = 0;
    std::vector<TaskReport> tasks;
    /// Present when all three tasks were predicted.
    std::optional<std::size_t> contradictions;
    /// Set by ensemble reports: number of cascaded (three-or-more way) ties.
    std::optional<std::size_t> cascaded_ties;
};

/// golds and predictions are aligned per tweet; one TaskPredictions per task.
MetricsReport evaluate_predictions(std::span<const TaskPredictions> gold,
                                   std::span<const TaskPredictions> predicted);

nlohmann::json to_json(const MetricsReport& report);
MetricsReport metrics_report_from_json(const nlohmann::json& j);
/// Fixed-width text tables, one block per task.
std::string render_table(const MetricsReport& report);

struct SweepRow {
    std::size_t ensemble_size;
    Attribute attribute;
    PRF macro;
};

/// per_seed[s][task] holds seed s's predictions for every tweet. For each
/// k = 1..K the first k seeds are ensembled and scored against gold.
std::vector<SweepRow> seed_sweep(std::span<const std::vector<TaskPredictions>> per_seed,
                                 std::span<const TaskPredictions> gold);
/// "k,task,precision,recall,f1" with a header row.
std::string sweep_csv(std::span<const SweepRow> rows);

}  // namespace softlabel
