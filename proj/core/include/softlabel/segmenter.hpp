#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "softlabel/phrases.hpp"

namespace softlabel {

/// Word unigram model used to split fused hashtags.
class Lexicon {
public:
    Lexicon() = default;

    /// Builds log-probabilities from raw counts. Counts must be positive.
    explicit Lexicon(const std::vector<std::pair<std::string, std::uint64_t>>& counts);

    /// Tab-separated "word<TAB>count" per line, as shipped in data/lexicon_en.tsv.
    static Lexicon load(const std::filesystem::path& path);

    bool empty() const { return log_prob_.empty(); }
    std::size_t size() const { return log_prob_.size(); }
    std::size_t max_word_length() const { return max_len_; }

    /// Log-probability of a known word, or nullptr.
    const double* find(std::string_view word) const;

    /// Score of an out-of-lexicon character: (min log-probability - 1).
    double unknown_char_penalty() const { return unknown_penalty_; }

private:
    std::unordered_map<std::string, double> log_prob_;
    std::size_t max_len_ = 0;
    double unknown_penalty_ = -1.0;
};

/// Hashtag splitter. Tags that name a listed phrase or tracking keyword stay
/// whole; everything else is segmented by maximum total log-probability.
class HashtagSegmenter {
public:
    HashtagSegmenter(const PhraseLists& lists, Lexicon lexicon);

    /// tag is the hashtag body without '#', already lowercase.
    std::vector<std::string> segment(std::string_view tag) const;

    /// Best split by dynamic programming, ignoring the retention list. Adjacent
    /// out-of-lexicon characters are merged into one residue token.
    std::vector<std::string> split(std::string_view tag) const;

    bool is_retained(std::string_view tag) const;

    const Lexicon& lexicon() const { return lexicon_; }

private:
    std::unordered_set<std::string> retained_;
    Lexicon lexicon_;
};

std::vector<std::string> segment_hashtag(std::string_view tag, const PhraseLists& lists,
                                         const Lexicon& lexicon);

}  // namespace softlabel
