#include "softlabel/annotations.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "softlabel/error.hpp"
#include "softlabel/phrases.hpp"

namespace softlabel {

namespace {

struct Alias {
    std::string_view alias;
    std::string_view canonical;
};

constexpr Alias kAliases[] = {
    {"not aggressive", "not"},         {"somewhat aggressive", "somewhat"},
    {"very aggressive", "very"},       {"na", "n/a"},
    {"none", "n/a"},                   {"not applicable", "n/a"},
    {"anti asian", "anti-asian"},      {"anti black", "anti-black"},
    {"both anti-asian and anti-black", "both"},
    {"neither", "normal"},
};

AttributeSchema make_schema(Attribute a, std::vector<std::string> cats, int tie_default) {
    return AttributeSchema{a, std::move(cats), tie_default};
}

}  // namespace

std::string_view to_string(Attribute a) {
    switch (a) {
        case Attribute::Aggression: return "aggression";
        case Attribute::Target: return "target";
        case Attribute::Type: return "type";
    }
    return "?";
}

Attribute parse_attribute(std::string_view name) {
    const std::string lower = collapse_lowercase(name);
    for (auto a : kAttributes)
        if (lower == to_string(a)) return a;
    if (lower == "task1" || lower == "1") return Attribute::Aggression;
    if (lower == "task2" || lower == "2") return Attribute::Target;
    if (lower == "task3" || lower == "3") return Attribute::Type;
    throw UsageError("unknown task/attribute '" + std::string(name) + "'");
}

std::string_view to_string(AnnotationClass c) {
    switch (c) {
        case AnnotationClass::A: return "A";
        case AnnotationClass::B: return "B";
        case AnnotationClass::C: return "C";
    }
    return "?";
}

int AttributeSchema::index_of(std::string_view name) const {
    std::string lower = collapse_lowercase(name);
    for (const auto& alias : kAliases)
        if (lower == alias.alias) lower = std::string(alias.canonical);
    for (std::size_t i = 0; i < categories.size(); ++i)
        if (categories[i] == lower) return static_cast<int>(i);
    throw DataError("invalid " + std::string(to_string(attribute)) + " category '" +
                    std::string(name) + "'");
}

const AttributeSchema& aggression_schema() {
    static const auto s = make_schema(Attribute::Aggression, {"not", "somewhat", "very"}, 1);
    return s;
}

// No tie rule is given for Target; ties default to anti-Asian, the focus category.
const AttributeSchema& target_schema_full() {
    static const auto s =
        make_schema(Attribute::Target, {"n/a", "anti-asian", "anti-black", "both"}, target::kAntiAsian);
    return s;
}

const AttributeSchema& target_schema() {
    static const auto s = make_schema(Attribute::Target, {"n/a", "anti-asian"}, target::kAntiAsian);
    return s;
}

const AttributeSchema& type_schema() {
    static const auto s = make_schema(Attribute::Type, {"normal", "abusive", "hate"}, 1);
    return s;
}

const AttributeSchema& task_schema(Attribute a) {
    switch (a) {
        case Attribute::Aggression: return aggression_schema();
        case Attribute::Target: return target_schema();
        case Attribute::Type: return type_schema();
    }
    return aggression_schema();
}

AttributeLabel aggregate(std::span<const int> votes, const AttributeSchema& schema) {
    if (votes.empty())
        throw DataError("no votes for attribute " + std::string(to_string(schema.attribute)));
    const std::size_t k = schema.size();
    std::vector<std::size_t> counts(k, 0);
    for (int v : votes) {
        if (v < 0 || static_cast<std::size_t>(v) >= k)
            throw DataError("invalid " + std::string(to_string(schema.attribute)) +
                            " category index " + std::to_string(v));
        ++counts[static_cast<std::size_t>(v)];
    }

    AttributeLabel out;
    const double n = static_cast<double>(votes.size());
    out.soft.resize(k);
    for (std::size_t c = 0; c < k; ++c) out.soft[c] = static_cast<double>(counts[c]) / n;

    const std::size_t top = *std::max_element(counts.begin(), counts.end());
    const auto leaders = std::count(counts.begin(), counts.end(), top);
    out.silver = leaders > 1 ? schema.tie_default
                             : static_cast<int>(std::find(counts.begin(), counts.end(), top) -
                                                counts.begin());

    const auto distinct = std::count_if(counts.begin(), counts.end(), [](auto x) { return x > 0; });
    out.annot_class = distinct == 1 ? AnnotationClass::A
                      : distinct == 2 ? AnnotationClass::B
                                      : AnnotationClass::C;
    return out;
}

AttributeLabel aggregate(std::span<const std::string> votes, const AttributeSchema& schema) {
    std::vector<int> idx;
    idx.reserve(votes.size());
    for (const auto& v : votes) idx.push_back(schema.index_of(v));
    return aggregate(idx, schema);
}

void validate_record(const AnnotationRecord& record) {
    const std::size_t n = record.annotators();
    if (n == 0) throw DataError("record " + record.tweet_id + ": no annotators");
    const AttributeSchema* schemas[] = {&aggression_schema(), &target_schema_full(), &type_schema()};
    for (auto a : kAttributes) {
        const auto& votes = record.of(a);
        if (votes.size() != n)
            throw DataError("record " + record.tweet_id + ": attribute " + std::string(to_string(a)) +
                            " has " + std::to_string(votes.size()) + " votes, expected " +
                            std::to_string(n));
        for (int v : votes)
            if (v < 0 || static_cast<std::size_t>(v) >= schemas[static_cast<int>(a)]->size())
                throw DataError("record " + record.tweet_id + ": invalid " +
                                std::string(to_string(a)) + " index " + std::to_string(v));
    }
}

std::size_t repair_hierarchy(AnnotationRecord& record) {
    std::size_t changed = 0;
    auto& agg = record.of(Attribute::Aggression);
    auto& tgt = record.of(Attribute::Target);
    auto& typ = record.of(Attribute::Type);
    for (std::size_t i = 0; i < agg.size(); ++i) {
        if (agg[i] != 0) continue;
        if (i < tgt.size() && tgt[i] != 0) {
            tgt[i] = 0;
            ++changed;
        }
        if (i < typ.size() && typ[i] != 0) {
            typ[i] = 0;
            ++changed;
        }
    }
    return changed;
}

LabeledExample label_record(const AnnotationRecord& record) {
    LabeledExample ex;
    ex.tweet_id = record.tweet_id;
    ex.of(Attribute::Aggression) = aggregate(record.of(Attribute::Aggression), aggression_schema());
    ex.of(Attribute::Target) = aggregate(record.of(Attribute::Target), target_schema_full());
    ex.of(Attribute::Type) = aggregate(record.of(Attribute::Type), type_schema());
    return ex;
}

std::vector<AdjustedPair> asian_focus_adjust(std::span<const AdjustedPair> labeled) {
    std::vector<AdjustedPair> out;
    out.reserve(labeled.size());
    for (const auto& [record, example] : labeled) {
        const int silver = example.of(Attribute::Target).silver;
        if (silver == target::kAntiBlack || silver == target::kBoth) continue;
        AdjustedPair adjusted{record, example};
        for (int& v : adjusted.record.of(Attribute::Target)) {
            if (v == target::kAntiBlack) v = target::kNone;
            else if (v == target::kBoth) v = target::kAntiAsian;
        }
        adjusted.example.of(Attribute::Target) =
            aggregate(adjusted.record.of(Attribute::Target), target_schema());
        out.push_back(std::move(adjusted));
    }
    return out;
}

KappaResult fleiss_kappa(std::span<const std::vector<std::size_t>> counts, std::size_t raters) {
    if (raters < 2) throw DataError("fleiss_kappa: need at least 2 raters per item");
    if (counts.empty()) throw DataError("fleiss_kappa: no items");
    const std::size_t k = counts.front().size();
    const double n = static_cast<double>(raters);
    std::vector<double> column(k, 0.0);
    double mean_agreement = 0.0;
    for (std::size_t i = 0; i < counts.size(); ++i) {
        const auto& row = counts[i];
        if (row.size() != k) throw DataError("fleiss_kappa: ragged count matrix at row " + std::to_string(i));
        std::size_t sum = 0;
        double pairs = 0.0;
        for (std::size_t j = 0; j < k; ++j) {
            sum += row[j];
            const double nij = static_cast<double>(row[j]);
            pairs += nij * (nij - 1.0);
            column[j] += nij;
        }
        if (sum != raters)
            throw DataError("fleiss_kappa: row " + std::to_string(i) + " sums to " +
                            std::to_string(sum) + ", expected " + std::to_string(raters));
        mean_agreement += pairs / (n * (n - 1.0));
    }
    const double items = static_cast<double>(counts.size());
    mean_agreement /= items;
    double expected = 0.0;
    for (double c : column) {
        const double p = c / (items * n);
        expected += p * p;
    }
    if (expected >= 1.0) return KappaResult{1.0, true};
    return KappaResult{(mean_agreement - expected) / (1.0 - expected), false};
}

std::vector<std::vector<std::size_t>> vote_count_matrix(std::span<const AnnotationRecord> records,
                                                        Attribute attribute,
                                                        const AttributeSchema& schema) {
    std::vector<std::vector<std::size_t>> m;
    m.reserve(records.size());
    for (const auto& r : records) {
        std::vector<std::size_t> row(schema.size(), 0);
        for (int v : r.of(attribute)) ++row.at(static_cast<std::size_t>(v));
        m.push_back(std::move(row));
    }
    return m;
}

std::vector<double> class_weights(std::span<const std::size_t> counts, std::size_t total,
                                  std::size_t num_categories) {
    if (counts.size() != num_categories)
        throw DataError("class_weights: " + std::to_string(counts.size()) + " counts for " +
                        std::to_string(num_categories) + " categories");
    if (std::accumulate(counts.begin(), counts.end(), std::size_t{0}) != total)
        throw DataError("class_weights: counts do not sum to the total");
    std::vector<double> w(counts.size());
    for (std::size_t c = 0; c < counts.size(); ++c) {
        if (counts[c] == 0)
            throw NumericError("class_weights: category " + std::to_string(c) +
                               " has no samples; weight undefined");
        w[c] = static_cast<double>(total) /
               (static_cast<double>(num_categories) * static_cast<double>(counts[c]));
    }
    return w;
}

std::vector<double> class_weights(std::span<const std::size_t> counts) {
    return class_weights(counts, std::accumulate(counts.begin(), counts.end(), std::size_t{0}),
                         counts.size());
}

LabeledCorpus label_corpus(std::vector<AnnotationRecord> records) {
    LabeledCorpus corpus;
    auto& stats = corpus.stats;
    stats.input_records = records.size();
    if (records.empty()) throw DataError("no annotation records");
    stats.annotators = records.front().annotators();

    std::vector<AdjustedPair> labeled;
    labeled.reserve(records.size());
    for (auto& r : records) {
        validate_record(r);
        if (r.annotators() != stats.annotators)
            throw DataError("record " + r.tweet_id + ": annotator count differs from the corpus");
        stats.repaired_votes += repair_hierarchy(r);
        labeled.push_back({r, label_record(r)});
    }

    const AttributeSchema* full[] = {&aggression_schema(), &target_schema_full(), &type_schema()};
    for (auto a : kAttributes) {
        auto& as = stats.attributes[static_cast<int>(a)];
        as.attribute = a;
        as.categories = full[static_cast<int>(a)]->categories;
        as.counts.assign(as.categories.size(), 0);
        for (const auto& p : labeled) ++as.counts[static_cast<std::size_t>(p.example.of(a).silver)];
    }
    if (stats.annotators >= 2)
        stats.target_kappa_full =
            fleiss_kappa(vote_count_matrix(records, Attribute::Target, target_schema_full()), stats.annotators);

    auto adjusted = asian_focus_adjust(labeled);
    stats.retained_records = adjusted.size();
    for (auto& p : adjusted) {
        corpus.records.push_back(std::move(p.record));
        corpus.examples.push_back(std::move(p.example));
    }

    for (auto a : kAttributes) {
        auto& as = stats.attributes[static_cast<int>(a)];
        const auto& schema = task_schema(a);
        as.adjusted_counts.assign(schema.size(), 0);
        as.class_cross_tab.assign(schema.size(), {0, 0, 0});
        for (const auto& ex : corpus.examples) {
            const auto& lbl = ex.of(a);
            ++as.adjusted_counts[static_cast<std::size_t>(lbl.silver)];
            ++as.class_cross_tab[static_cast<std::size_t>(lbl.silver)][static_cast<int>(lbl.annot_class)];
        }
        if (stats.annotators >= 2 && !corpus.records.empty())
            as.kappa = fleiss_kappa(vote_count_matrix(corpus.records, a, schema), stats.annotators);
    }
    return corpus;
}

}  // namespace softlabel
