#pragma once

#include <filesystem>
#include <istream>
#include <ostream>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "softlabel/annotations.hpp"
#include "softlabel/preprocess.hpp"
#include "softlabel/synth.hpp"

namespace softlabel {

// Newline-delimited JSON records. Readers throw DataError naming the file,
// line and offending field.

nlohmann::json to_json(const Tweet& tweet);
Tweet tweet_from_json(const nlohmann::json& j);

/// Votes are written as category names; readers also accept integer indices.
nlohmann::json to_json(const AnnotationRecord& record);
AnnotationRecord annotation_record_from_json(const nlohmann::json& j);

nlohmann::json to_json(const LabeledExample& example);
LabeledExample labeled_example_from_json(const nlohmann::json& j);

nlohmann::json to_json(const CorpusStats& stats);
nlohmann::json to_json(const TrueLabel& truth);
TrueLabel true_label_from_json(const nlohmann::json& j);

/// One model's output for one tweet: predicted category index per task and,
/// optionally, the class probabilities.
struct PredictionRecord {
    std::string tweet_id;
    std::vector<Attribute> attributes;
    std::vector<int> predicted;
    std::vector<std::vector<double>> probabilities;
};
nlohmann::json to_json(const PredictionRecord& record);
PredictionRecord prediction_record_from_json(const nlohmann::json& j);

std::vector<nlohmann::json> read_jsonl(std::istream& in, const std::string& source);
std::vector<nlohmann::json> read_jsonl(const std::filesystem::path& path);
void write_jsonl(std::ostream& out, const std::vector<nlohmann::json>& rows);

std::vector<Tweet> read_tweets(const std::filesystem::path& path);
std::vector<AnnotationRecord> read_annotations(const std::filesystem::path& path);
std::vector<LabeledExample> read_labeled(const std::filesystem::path& path);
std::vector<TrueLabel> read_truth(const std::filesystem::path& path);
std::vector<PredictionRecord> read_predictions(const std::filesystem::path& path);

template <typename T>
std::vector<nlohmann::json> to_json_rows(const std::vector<T>& items) {
    std::vector<nlohmann::json> rows;
    rows.reserve(items.size());
    for (const auto& item : items) rows.push_back(to_json(item));
    return rows;
}

/// Writes to a sibling temporary file and renames it into place.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);
std::string read_file(const std::filesystem::path& path);
std::string jsonl_string(const std::vector<nlohmann::json>& rows);

/// Tweet id -> normalized text. Tweets without a stored normalized form are
/// normalized with the given normalizer.
std::unordered_map<std::string, std::string> tweet_texts(const std::vector<Tweet>& tweets,
                                                         const Normalizer& normalizer);

/// FNV-1a 64-bit hex digest, used for manifest checksums.
std::string checksum(const std::string& bytes);

}  // namespace softlabel
