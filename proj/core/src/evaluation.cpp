#include "softlabel/evaluation.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "softlabel/error.hpp"

namespace softlabel {

namespace {

double ratio(double num, double den) { return den == 0.0 ? 0.0 : num / den; }

std::string fmt4(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", v);
    return buf;
}

// Pairwise winners, indexed [a][b] by category index in schema order.
constexpr int kAggressionTies[3][3] = {{0, 0, 0}, {0, 1, 1}, {0, 1, 2}};
constexpr int kTargetTies[2][2] = {{0, 0}, {0, 1}};
constexpr int kTypeTies[3][3] = {{0, 0, 0}, {0, 1, 1}, {0, 1, 2}};

}  // namespace

ConfusionMatrix ConfusionMatrix::from_rows(const std::vector<std::vector<std::size_t>>& rows) {
    ConfusionMatrix cm(rows.size());
    for (std::size_t g = 0; g < rows.size(); ++g) {
        if (rows[g].size() != rows.size()) throw DataError("confusion matrix must be square");
        for (std::size_t p = 0; p < rows.size(); ++p) cm.counts_[g * cm.k_ + p] = rows[g][p];
    }
    return cm;
}

ConfusionMatrix ConfusionMatrix::from_labels(std::span<const int> gold, std::span<const int> predicted,
                                             std::size_t categories) {
    if (gold.size() != predicted.size()) throw DataError("gold and predicted label counts differ");
    ConfusionMatrix cm(categories);
    for (std::size_t i = 0; i < gold.size(); ++i) cm.add(gold[i], predicted[i]);
    return cm;
}

void ConfusionMatrix::add(int gold, int predicted, std::size_t count) {
    if (gold < 0 || predicted < 0 || static_cast<std::size_t>(gold) >= k_ ||
        static_cast<std::size_t>(predicted) >= k_)
        throw DataError("confusion matrix: category out of range");
    counts_[static_cast<std::size_t>(gold) * k_ + static_cast<std::size_t>(predicted)] += count;
}

std::size_t ConfusionMatrix::total() const {
    return std::accumulate(counts_.begin(), counts_.end(), std::size_t{0});
}

MacroPRF macro_prf(const ConfusionMatrix& cm) {
    const std::size_t k = cm.categories();
    MacroPRF out;
    out.per_category.resize(k);
    for (std::size_t c = 0; c < k; ++c) {
        double tp = static_cast<double>(cm(c, c)), fp = 0.0, fn = 0.0;
        for (std::size_t o = 0; o < k; ++o) {
            if (o == c) continue;
            fp += static_cast<double>(cm(o, c));
            fn += static_cast<double>(cm(c, o));
        }
        PRF& m = out.per_category[c];
        m.precision = ratio(tp, tp + fp);
        m.recall = ratio(tp, tp + fn);
        m.f1 = ratio(2.0 * m.precision * m.recall, m.precision + m.recall);
        out.macro.precision += m.precision;
        out.macro.recall += m.recall;
        out.macro.f1 += m.f1;
    }
    if (k > 0) {
        out.macro.precision /= static_cast<double>(k);
        out.macro.recall /= static_cast<double>(k);
        out.macro.f1 /= static_cast<double>(k);
    }
    return out;
}

int pairwise_tie_winner(Attribute attribute, int a, int b) {
    switch (attribute) {
        case Attribute::Aggression: return kAggressionTies[a][b];
        case Attribute::Target: return kTargetTies[a][b];
        case Attribute::Type: return kTypeTies[a][b];
    }
    return std::min(a, b);
}

int ensemble_vote_one(Attribute attribute, std::span<const int> seed_votes, int* leaders) {
    if (seed_votes.empty()) throw DataError("ensemble_vote: no seed predictions");
    const std::size_t k = task_schema(attribute).size();
    std::vector<std::size_t> counts(k, 0);
    for (int v : seed_votes) {
        if (v < 0 || static_cast<std::size_t>(v) >= k) throw DataError("ensemble_vote: category out of range");
        ++counts[static_cast<std::size_t>(v)];
    }
    const std::size_t top = *std::max_element(counts.begin(), counts.end());
    std::vector<int> tied;
    for (std::size_t c = 0; c < k; ++c)
        if (counts[c] == top) tied.push_back(static_cast<int>(c));
    if (leaders != nullptr) *leaders = static_cast<int>(tied.size());
    // tied is ascending in severity: resolve the two least severe first, then the rest
    int winner = tied.front();
    for (std::size_t i = 1; i < tied.size(); ++i) winner = pairwise_tie_winner(attribute, winner, tied[i]);
    return winner;
}

EnsembleOutcome ensemble_vote(Attribute attribute, std::span<const std::vector<int>> votes) {
    EnsembleOutcome out;
    out.winners.reserve(votes.size());
    std::size_t seeds = votes.empty() ? 0 : votes.front().size();
    for (const auto& v : votes) {
        if (v.size() != seeds) throw DataError("ensemble_vote: unequal seed counts across tweets");
        int leaders = 0;
        out.winners.push_back(ensemble_vote_one(attribute, v, &leaders));
        if (leaders == 2) ++out.pairwise_ties;
        if (leaders > 2) ++out.cascaded_ties;
    }
    return out;
}

std::size_t contradiction_count(std::span<const int> aggression, std::span<const int> target,
                                std::span<const int> type) {
    if (aggression.size() != target.size() || aggression.size() != type.size())
        throw DataError("contradiction_count: prediction lists differ in length");
    std::size_t n = 0;
    for (std::size_t i = 0; i < aggression.size(); ++i)
        if (aggression[i] == 0 && (target[i] != 0 || type[i] != 0)) ++n;
    return n;
}

MetricsReport evaluate_predictions(std::span<const TaskPredictions> gold,
                                   std::span<const TaskPredictions> predicted) {
    MetricsReport report;
    const std::vector<int>* by_attr[3] = {nullptr, nullptr, nullptr};
    for (const auto& p : predicted) {
        auto g = std::find_if(gold.begin(), gold.end(), [&](const auto& x) { return x.attribute == p.attribute; });
        if (g == gold.end()) throw DataError("no gold labels for task " + std::string(to_string(p.attribute)));
        const auto& schema = task_schema(p.attribute);
        TaskReport tr{p.attribute, schema.categories,
                      ConfusionMatrix::from_labels(g->predicted, p.predicted, schema.size()), {}};
        tr.metrics = macro_prf(tr.confusion);
        report.samples = p.predicted.size();
        report.tasks.push_back(std::move(tr));
        by_attr[static_cast<int>(p.attribute)] = &p.predicted;
    }
    if (by_attr[0] && by_attr[1] && by_attr[2])
        report.contradictions = contradiction_count(*by_attr[0], *by_attr[1], *by_attr[2]);
    return report;
}

namespace {

nlohmann::json prf_json(const PRF& m) {
    return {{"precision", m.precision}, {"recall", m.recall}, {"f1", m.f1}};
}

PRF prf_from(const nlohmann::json& j) {
    return {j.at("precision").get<double>(), j.at("recall").get<double>(), j.at("f1").get<double>()};
}

}  // namespace

nlohmann::json to_json(const MetricsReport& report) {
    nlohmann::json tasks = nlohmann::json::array();
    for (const auto& t : report.tasks) {
        nlohmann::json per = nlohmann::json::object();
        std::vector<std::vector<std::size_t>> rows(t.confusion.categories());
        for (std::size_t c = 0; c < t.categories.size(); ++c) {
            per[t.categories[c]] = prf_json(t.metrics.per_category[c]);
            for (std::size_t p = 0; p < t.categories.size(); ++p) rows[c].push_back(t.confusion(c, p));
        }
        tasks.push_back({{"task", std::string(to_string(t.attribute))},
                         {"categories", t.categories},
                         {"macro", prf_json(t.metrics.macro)},
                         {"per_category", per},
                         {"confusion", rows}});
    }
    nlohmann::json j = {{"samples", report.samples}, {"tasks", tasks}};
    j["contradictions"] = report.contradictions ? nlohmann::json(*report.contradictions) : nlohmann::json(nullptr);
    if (report.cascaded_ties) j["cascaded_ties"] = *report.cascaded_ties;
    return j;
}

MetricsReport metrics_report_from_json(const nlohmann::json& j) {
    try {
        MetricsReport r;
        r.samples = j.at("samples").get<std::size_t>();
        for (const auto& t : j.at("tasks")) {
            TaskReport tr{parse_attribute(t.at("task").get<std::string>()),
                          t.at("categories").get<std::vector<std::string>>(),
                          ConfusionMatrix::from_rows(t.at("confusion").get<std::vector<std::vector<std::size_t>>>()),
                          {}};
            tr.metrics.macro = prf_from(t.at("macro"));
            for (const auto& c : tr.categories) tr.metrics.per_category.push_back(prf_from(t.at("per_category").at(c)));
            r.tasks.push_back(std::move(tr));
        }
        if (j.contains("contradictions") && !j["contradictions"].is_null())
            r.contradictions = j["contradictions"].get<std::size_t>();
        if (j.contains("cascaded_ties")) r.cascaded_ties = j["cascaded_ties"].get<std::size_t>();
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("metrics report: ") + e.what());
    }
}

std::string render_table(const MetricsReport& report) {
    std::ostringstream os;
    os << "samples: " << report.samples << '\n';
    for (const auto& t : report.tasks) {
        os << '\n' << "task " << to_string(t.attribute) << '\n';
        char line[128];
        std::snprintf(line, sizeof line, "  %-12s %9s %9s %9s\n", "category", "precision", "recall", "f1");
        os << line;
        for (std::size_t c = 0; c < t.categories.size(); ++c) {
            const auto& m = t.metrics.per_category[c];
            std::snprintf(line, sizeof line, "  %-12s %9s %9s %9s\n", t.categories[c].c_str(),
                          fmt4(m.precision).c_str(), fmt4(m.recall).c_str(), fmt4(m.f1).c_str());
            os << line;
        }
        const auto& m = t.metrics.macro;
        std::snprintf(line, sizeof line, "  %-12s %9s %9s %9s\n", "macro", fmt4(m.precision).c_str(),
                      fmt4(m.recall).c_str(), fmt4(m.f1).c_str());
        os << line;
    }
    if (report.contradictions) os << "\nself-contradictory predictions: " << *report.contradictions << '\n';
    if (report.cascaded_ties) os << "three-way ensemble ties (cascade rule): " << *report.cascaded_ties << '\n';
    return os.str();
}

std::vector<SweepRow> seed_sweep(std::span<const std::vector<TaskPredictions>> per_seed,
                                 std::span<const TaskPredictions> gold) {
    if (per_seed.empty()) throw DataError("seed_sweep: no seeds");
    std::vector<SweepRow> rows;
    for (std::size_t k = 1; k <= per_seed.size(); ++k) {
        for (std::size_t t = 0; t < per_seed.front().size(); ++t) {
            const Attribute attr = per_seed.front()[t].attribute;
            const std::size_t n = per_seed.front()[t].predicted.size();
            std::vector<std::vector<int>> votes(n);
            for (std::size_t s = 0; s < k; ++s) {
                const auto& preds = per_seed[s].at(t);
                if (preds.attribute != attr || preds.predicted.size() != n)
                    throw DataError("seed_sweep: seed prediction sets are not aligned");
                for (std::size_t i = 0; i < n; ++i) votes[i].push_back(preds.predicted[i]);
            }
            TaskPredictions ens{attr, ensemble_vote(attr, votes).winners};
            const auto report = evaluate_predictions(gold, std::span<const TaskPredictions>(&ens, 1));
            rows.push_back({k, attr, report.tasks.front().metrics.macro});
        }
    }
    return rows;
}

std::string sweep_csv(std::span<const SweepRow> rows) {
    std::ostringstream os;
    os << "k,task,precision,recall,f1\n";
    char buf[160];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, "%zu,%s,%.6f,%.6f,%.6f\n", r.ensemble_size,
                      std::string(to_string(r.attribute)).c_str(), r.macro.precision, r.macro.recall, r.macro.f1);
        os << buf;
    }
    return os.str();
}

}  // namespace softlabel
