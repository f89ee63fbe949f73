#include "softlabel/phrases.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>

#include "softlabel/error.hpp"

namespace softlabel {

namespace {

constexpr std::array<std::string_view, 4> kCategoryNames = {"anti-asian", "anti-black",
                                                            "interracial", "normal"};

bool contains_phrase(std::string_view text, const std::set<std::string>& phrases) {
    for (const auto& phrase : phrases) {
        if (text.find(phrase) != std::string_view::npos) return true;
        std::string fused;
        fused.reserve(phrase.size());
        for (char c : phrase)
            if (c != ' ') fused.push_back(c);
        if (fused.size() != phrase.size() && text.find(fused) != std::string_view::npos)
            return true;
    }
    return false;
}

std::string trim(std::string_view s) {
    auto is_space = [](unsigned char c) { return std::isspace(c) != 0; };
    std::size_t b = 0, e = s.size();
    while (b < e && is_space(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && is_space(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

void check_entries(const std::set<std::string>& entries, std::string_view list_name) {
    for (const auto& e : entries) {
        if (e.empty()) throw DataError(std::string(list_name) + ": empty phrase");
        if (e != trim(e))
            throw DataError(std::string(list_name) + ": phrase has surrounding whitespace: '" + e + "'");
        for (unsigned char c : e)
            if (std::isupper(c))
                throw DataError(std::string(list_name) + ": phrase not lowercase: '" + e + "'");
    }
}

}  // namespace

std::string_view to_string(TweetCategory c) { return kCategoryNames[static_cast<int>(c)]; }

TweetCategory parse_tweet_category(std::string_view name) {
    std::string lower = collapse_lowercase(name);
    for (auto c : kTweetCategories)
        if (lower == to_string(c)) return c;
    throw DataError("unknown tweet category '" + std::string(name) + "'");
}

void PhraseLists::validate() const {
    check_entries(anti_asian, "anti_asian");
    check_entries(anti_black, "anti_black");
    check_entries(tracking_keywords, "tracking_keywords");
    for (const auto& p : anti_asian)
        if (anti_black.contains(p))
            throw DataError("phrase '" + p + "' appears in both anti_asian and anti_black");
}

PhraseLists PhraseLists::defaults() {
    return PhraseLists{default_anti_asian_phrases(), {}, default_tracking_keywords()};
}

const std::set<std::string>& default_anti_asian_phrases() {
    static const std::set<std::string> phrases = {
        "batsoup",        "bioattack",
        "blame china",    "boycott china",
        "bug men",        "bugland",
        "ccp",            "chankoro",
        "chicom",         "china is asshole",
        "china is terrorist",
        "china lie people die",
        "china should apologize",
        "china virus",    "china virus outbreak",
        "chinaflu",       "chinazi",
        "chinese propaganda",
        "chinese virus",  "ching chong",
        "chinigger",      "chink",
        "chinkland",      "chinksect",
        "communism kill", "communistchina",
        "fuck china",     "goloid",
        "gook",           "gook eyed",
        "gookie",         "gooklet",
        "gooky eye",      "insectoid",
        "make china pay", "no asian allowed",
        "no chinese allowed",
        "oriental devil", "pinkdick",
        "ricenigger",     "wohan",
        "wuflu",          "wuhancorona",
        "wuhaninfluenza", "wuhanpneunomia",
        "wuhansars",      "yellow jew",
        "yellow nigger",  "yellow peril",
    };
    return phrases;
}

const std::set<std::string>& default_tracking_keywords() {
    // Collection keywords of the public COVID-19 tweet-ID stream.
    static const std::set<std::string> keywords = {
        "coronavirus",    "koronavirus",    "corona",          "cdc",
        "wuhancoronavirus", "wuhanlockdown", "ncov",           "wuhan",
        "n95",            "kungflu",        "epidemic",        "outbreak",
        "sinophobia",     "china",          "covid-19",        "corona virus",
        "covid",          "covid19",        "sars-cov-2",      "covd",
        "pandemic",       "coronapocalypse", "canceleverything", "coronials",
        "socialdistancingnow", "social distancing", "socialdistancing", "panicbuy",
        "panic buy",      "panicbuying",    "panic buying",    "14dayquarantine",
        "duringmy14dayquarantine", "panic shop", "panic shopping", "panicshop",
        "inmyquarantinesurvivalkit", "panic-buy", "panic-shop", "coronakindness",
        "quarantinelife", "chinese virus",  "chinesevirus",    "stayhomechallenge",
        "stay home challenge", "sflockdown", "dontbeaspreader", "lockdown",
        "lock down",      "shelteringinplace", "sheltering in place", "staysafestayhome",
        "stay safe stay home", "trumppandemic", "trump pandemic", "flattenthecurve",
        "flatten the curve", "china virus", "chinavirus",     "quarentinelife",
        "ppeshortage",    "saferathome",    "stayathome",      "stay at home",
        "stay home",      "stayhome",       "getmeppe",        "covidiot",
        "epitwitter",     "pandemie",
    };
    return keywords;
}

std::set<std::string> load_phrase_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open phrase file " + path.string());
    std::set<std::string> out;
    std::string line;
    while (std::getline(in, line)) {
        std::string entry = collapse_lowercase(line);
        if (entry.empty() || entry.front() == '#') continue;
        out.insert(std::move(entry));
    }
    return out;
}

std::string collapse_lowercase(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    bool pending_space = false;
    for (unsigned char c : text) {
        if (std::isspace(c)) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) out.push_back(' ');
        pending_space = false;
        out.push_back(static_cast<char>(std::tolower(c)));
    }
    return out;
}

TweetCategory categorize_tweet(std::string_view text, const PhraseLists& lists) {
    const std::string norm = collapse_lowercase(text);
    const bool asian = contains_phrase(norm, lists.anti_asian);
    const bool black = contains_phrase(norm, lists.anti_black);
    if (asian && black) return TweetCategory::Interracial;
    if (asian) return TweetCategory::AntiAsian;
    if (black) return TweetCategory::AntiBlack;
    return TweetCategory::Normal;
}

}  // namespace softlabel
