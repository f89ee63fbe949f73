#include "softlabel/segmenter.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "softlabel/error.hpp"

namespace softlabel {

namespace {

std::string alnum_only(std::string_view s) {
    std::string out;
    for (unsigned char c : s)
        if (std::isalnum(c)) out.push_back(static_cast<char>(std::tolower(c)));
    return out;
}

}  // namespace

Lexicon::Lexicon(const std::vector<std::pair<std::string, std::uint64_t>>& counts) {
    double total = 0.0;
    for (const auto& [word, count] : counts) {
        if (word.empty() || count == 0) throw DataError("lexicon entry with empty word or zero count");
        total += static_cast<double>(count);
    }
    double min_log = 0.0;
    for (const auto& [word, count] : counts) {
        const double lp = std::log(static_cast<double>(count) / total);
        auto [it, inserted] = log_prob_.emplace(word, lp);
        if (!inserted) it->second = std::max(it->second, lp);
        min_log = std::min(min_log, lp);
        max_len_ = std::max(max_len_, word.size());
    }
    unknown_penalty_ = min_log - 1.0;
}

Lexicon Lexicon::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open lexicon " + path.string());
    std::vector<std::pair<std::string, std::uint64_t>> counts;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream fields(line);
        std::string word;
        std::uint64_t count = 0;
        if (!(fields >> word >> count))
            throw DataError(path.string() + ":" + std::to_string(lineno) + ": expected 'word<TAB>count'");
        counts.emplace_back(std::move(word), count);
    }
    return Lexicon(counts);
}

const double* Lexicon::find(std::string_view word) const {
    auto it = log_prob_.find(std::string(word));
    return it == log_prob_.end() ? nullptr : &it->second;
}

HashtagSegmenter::HashtagSegmenter(const PhraseLists& lists, Lexicon lexicon)
    : lexicon_(std::move(lexicon)) {
    for (const auto* set : {&lists.anti_asian, &lists.anti_black, &lists.tracking_keywords})
        for (const auto& phrase : *set) {
            std::string key = alnum_only(phrase);
            if (!key.empty()) retained_.insert(std::move(key));
        }
}

bool HashtagSegmenter::is_retained(std::string_view tag) const {
    return retained_.contains(alnum_only(tag));
}

std::vector<std::string> HashtagSegmenter::segment(std::string_view tag) const {
    if (tag.empty()) return {};
    if (is_retained(tag)) return {std::string(tag)};
    return split(tag);
}

std::vector<std::string> HashtagSegmenter::split(std::string_view tag) const {
    const std::size_t n = tag.size();
    if (n == 0) return {};
    const double unknown = lexicon_.unknown_char_penalty();
    const std::size_t max_len = std::max<std::size_t>(1, lexicon_.max_word_length());

    std::vector<double> best(n + 1, -std::numeric_limits<double>::infinity());
    std::vector<std::size_t> back(n + 1, 0);
    std::vector<char> known(n + 1, 0);
    best[0] = 0.0;
    for (std::size_t end = 1; end <= n; ++end) {
        // single unknown character always available, so every prefix is reachable
        best[end] = best[end - 1] + unknown;
        back[end] = end - 1;
        known[end] = 0;
        for (std::size_t len = 1; len <= std::min(end, max_len); ++len) {
            const double* lp = lexicon_.find(tag.substr(end - len, len));
            if (lp == nullptr) continue;
            const double score = best[end - len] + *lp;
            if (score > best[end]) {
                best[end] = score;
                back[end] = end - len;
                known[end] = 1;
            }
        }
    }

    std::vector<std::pair<std::string, bool>> pieces;
    for (std::size_t end = n; end > 0; end = back[end])
        pieces.emplace_back(std::string(tag.substr(back[end], end - back[end])), known[end] != 0);
    std::reverse(pieces.begin(), pieces.end());

    std::vector<std::string> out;
    bool prev_unknown = false;
    for (auto& [piece, is_known] : pieces) {
        if (!is_known && prev_unknown)
            out.back() += piece;
        else
            out.push_back(std::move(piece));
        prev_unknown = !is_known;
    }
    return out;
}

std::vector<std::string> segment_hashtag(std::string_view tag, const PhraseLists& lists,
                                         const Lexicon& lexicon) {
    return HashtagSegmenter(lists, lexicon).segment(tag);
}

}  // namespace softlabel
