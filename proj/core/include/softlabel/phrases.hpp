#pragma once

#include <array>
#include <filesystem>
#include <set>
#include <string>
#include <string_view>

namespace softlabel {

/// Tentative category of a candidate tweet, assigned by keyword matching.
enum class TweetCategory { AntiAsian = 0, AntiBlack = 1, Interracial = 2, Normal = 3 };

inline constexpr std::array<TweetCategory, 4> kTweetCategories = {
    TweetCategory::AntiAsian, TweetCategory::AntiBlack, TweetCategory::Interracial,
    TweetCategory::Normal};

std::string_view to_string(TweetCategory c);
TweetCategory parse_tweet_category(std::string_view name);

/// Targeted phrase sets plus the collection keywords whose hashtags are kept intact.
struct PhraseLists {
    std::set<std::string> anti_asian;
    std::set<std::string> anti_black;
    std::set<std::string> tracking_keywords;

    /// Throws DataError when an entry is empty, not lowercase, padded with
    /// whitespace, or present in both target sets.
    void validate() const;

    /// Bundled anti-Asian list, an empty anti-Black list (that list is supplied
    /// by the user) and the COVID collection keywords.
    static PhraseLists defaults();
};

/// The 49 bundled anti-Asian phrases.
const std::set<std::string>& default_anti_asian_phrases();
const std::set<std::string>& default_tracking_keywords();

/// One phrase per line, UTF-8; blank lines and lines starting with '#' skipped.
/// Entries are lowercased and trimmed.
std::set<std::string> load_phrase_file(const std::filesystem::path& path);

/// Lowercase and collapse runs of whitespace to one space, trimming both ends.
std::string collapse_lowercase(std::string_view text);

/// Keyword categorization. Each phrase matches as a substring in its spaced
/// form or with its spaces removed (hashtags fuse words).
TweetCategory categorize_tweet(std::string_view text, const PhraseLists& lists);

}  // namespace softlabel
