#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace softlabel {

enum class Attribute { Aggression = 0, Target = 1, Type = 2 };
inline constexpr std::array<Attribute, 3> kAttributes = {Attribute::Aggression, Attribute::Target,
                                                         Attribute::Type};

std::string_view to_string(Attribute a);
Attribute parse_attribute(std::string_view name);

/// Ordered categories of one attribute. Index 0 is always the neutral option.
struct AttributeSchema {
    Attribute attribute;
    std::vector<std::string> categories;
    int tie_default;

    std::size_t size() const { return categories.size(); }
    /// Accepts the canonical name or a known alias, case-insensitively.
    /// Throws DataError naming the value otherwise.
    int index_of(std::string_view name) const;
    const std::string& name(int index) const { return categories.at(static_cast<std::size_t>(index)); }
};

const AttributeSchema& aggression_schema();
/// Target as annotated: N/A, anti-Asian, anti-Black, Both.
const AttributeSchema& target_schema_full();
/// Target after the Asian-focus adjustment: N/A, anti-Asian.
const AttributeSchema& target_schema();
const AttributeSchema& type_schema();
/// Schema used for training and evaluation of an attribute (binary Target).
const AttributeSchema& task_schema(Attribute a);

namespace target {
inline constexpr int kNone = 0, kAntiAsian = 1, kAntiBlack = 2, kBoth = 3;
}

enum class AnnotationClass { A, B, C };
std::string_view to_string(AnnotationClass c);

struct AttributeLabel {
    std::vector<double> soft;
    int silver = 0;
    AnnotationClass annot_class = AnnotationClass::A;
};

/// Votes of n annotators for the three attributes. Target indices refer to the
/// full four-category schema until asian_focus_adjust rewrites them.
struct AnnotationRecord {
    std::string tweet_id;
    std::array<std::vector<int>, 3> votes;

    const std::vector<int>& of(Attribute a) const { return votes[static_cast<int>(a)]; }
    std::vector<int>& of(Attribute a) { return votes[static_cast<int>(a)]; }
    std::size_t annotators() const { return votes[0].size(); }
};

struct LabeledExample {
    std::string tweet_id;
    std::array<AttributeLabel, 3> labels;

    const AttributeLabel& of(Attribute a) const { return labels[static_cast<int>(a)]; }
    AttributeLabel& of(Attribute a) { return labels[static_cast<int>(a)]; }
};

/// soft[c] = count(c)/n; silver = plurality, schema.tie_default on any tie for
/// the maximum; class A for one distinct category, B for two, C for three or more.
AttributeLabel aggregate(std::span<const int> votes, const AttributeSchema& schema);
AttributeLabel aggregate(std::span<const std::string> votes, const AttributeSchema& schema);

/// Checks shape and category ranges of a record against the full schemas.
void validate_record(const AnnotationRecord& record);

/// Coerces Target/Type of every Not-Aggressive vote to the neutral option.
/// Returns the number of individual votes changed.
std::size_t repair_hierarchy(AnnotationRecord& record);

/// Labels one record with the full four-category Target schema.
LabeledExample label_record(const AnnotationRecord& record);

struct AdjustedPair {
    AnnotationRecord record;
    LabeledExample example;
};

/// Drops tweets whose Target silver is anti-Black or Both, remaps the surviving
/// individual Target votes (anti-Black -> N/A, Both -> anti-Asian) and
/// re-aggregates Target under the binary schema.
std::vector<AdjustedPair> asian_focus_adjust(std::span<const AdjustedPair> labeled);

struct KappaResult {
    double kappa = 0.0;
    /// True when expected agreement is 1 (a single category was ever used).
    /// kappa is then reported as 1.0 but the statistic is undefined.
    bool degenerate = false;
};

/// Fleiss' kappa over an items x categories count matrix with n raters per item.
/// Throws DataError when a row does not sum to n or n < 2.
KappaResult fleiss_kappa(std::span<const std::vector<std::size_t>> counts, std::size_t raters);

/// Per-item category counts for one attribute.
std::vector<std::vector<std::size_t>> vote_count_matrix(std::span<const AnnotationRecord> records,
                                                        Attribute attribute,
                                                        const AttributeSchema& schema);

/// w_c = S / (C * s_c). Throws NumericError on a zero count and DataError when
/// S does not equal the sum of counts or C the number of categories.
std::vector<double> class_weights(std::span<const std::size_t> counts, std::size_t total,
                                  std::size_t num_categories);
std::vector<double> class_weights(std::span<const std::size_t> counts);

/// Corpus-level summary written next to the labeled examples.
struct AttributeStats {
    Attribute attribute;
    std::vector<std::string> categories;
    KappaResult kappa;
    std::vector<std::size_t> counts;           // silver counts before adjustment
    std::vector<std::size_t> adjusted_counts;  // silver counts after adjustment
    /// cross_tab[category][class] over the adjusted corpus
    std::vector<std::array<std::size_t, 3>> class_cross_tab;
};

struct CorpusStats {
    std::size_t input_records = 0;
    std::size_t retained_records = 0;
    std::size_t repaired_votes = 0;
    std::size_t annotators = 0;
    std::array<AttributeStats, 3> attributes;
    /// Target agreement on the four annotated categories, full corpus.
    KappaResult target_kappa_full;
};

struct LabeledCorpus {
    std::vector<AnnotationRecord> records;
    std::vector<LabeledExample> examples;
    CorpusStats stats;
};

/// Repair, aggregate, adjust and summarize a corpus of raw records.
LabeledCorpus label_corpus(std::vector<AnnotationRecord> records);

}  // namespace softlabel
