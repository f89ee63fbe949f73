#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "softlabel/phrases.hpp"
#include "softlabel/segmenter.hpp"

namespace softlabel {

inline constexpr std::string_view kUrlToken = "<url>";
inline constexpr std::string_view kUserToken = "<user>";

struct Tweet {
    std::string id;
    std::string raw_text;
    std::string month;  // "YYYY-MM"
    TweetCategory category = TweetCategory::Normal;
    std::string text;  // normalized form; empty until preprocessed
};

/// Tweet normalizer. Rules, in order:
///   1. emoji / pictograph codepoints become spaces
///   2. remaining non-ASCII bytes and ASCII control characters are dropped
///   3. lowercase, whitespace tokenization
///   4. URLs (scheme, www. or t.co/ forms) are replaced by <url>
///   5. @mentions are replaced by <user>
///   6. hashtags lose the '#' and are retained or segmented
///   7. standalone "rt" and emoticon tokens are removed
///   8. consecutive duplicate tokens collapse to one
/// The output is a single-space-joined token string and normalize() is idempotent.
class Normalizer {
public:
    Normalizer(const PhraseLists& lists, Lexicon lexicon);

    std::string normalize(std::string_view raw) const;
    std::vector<std::string> tokens(std::string_view raw) const;

    const HashtagSegmenter& segmenter() const { return segmenter_; }

private:
    void expand_token(std::string_view token, std::vector<std::string>& out) const;
    void expand_mentions_and_tags(std::string_view token, std::vector<std::string>& out) const;

    HashtagSegmenter segmenter_;
};

std::string normalize_tweet(std::string_view raw, const PhraseLists& lists, const Lexicon& lexicon);

/// Drops emoji codepoints and all other non-ASCII input. Invalid UTF-8 bytes
/// are treated as non-ASCII.
std::string strip_to_ascii(std::string_view utf8);

bool is_emoji_codepoint(char32_t cp);
bool is_emoticon(std::string_view token);

}  // namespace softlabel
