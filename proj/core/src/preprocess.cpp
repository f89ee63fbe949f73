#include "softlabel/preprocess.hpp"

#include <algorithm>
#include <array>
#include <cctype>

namespace softlabel {

namespace {

bool is_word_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '_';
}

// Returns the byte length of the UTF-8 sequence starting at s[i] and decodes
// it into cp. Malformed sequences report length 1 and cp = U+FFFD.
std::size_t decode_utf8(std::string_view s, std::size_t i, char32_t& cp) {
    const auto b0 = static_cast<unsigned char>(s[i]);
    std::size_t len = 0;
    if (b0 < 0x80) {
        cp = b0;
        return 1;
    } else if ((b0 & 0xE0) == 0xC0) {
        len = 2;
        cp = b0 & 0x1F;
    } else if ((b0 & 0xF0) == 0xE0) {
        len = 3;
        cp = b0 & 0x0F;
    } else if ((b0 & 0xF8) == 0xF0) {
        len = 4;
        cp = b0 & 0x07;
    } else {
        cp = 0xFFFD;
        return 1;
    }
    if (i + len > s.size()) {
        cp = 0xFFFD;
        return 1;
    }
    for (std::size_t k = 1; k < len; ++k) {
        const auto b = static_cast<unsigned char>(s[i + k]);
        if ((b & 0xC0) != 0x80) {
            cp = 0xFFFD;
            return 1;
        }
        cp = (cp << 6) | (b & 0x3F);
    }
    return len;
}

std::size_t find_url_start(std::string_view tok) {
    std::size_t best = std::string_view::npos;
    auto consider = [&](std::string_view pattern, bool needs_boundary) {
        std::size_t pos = tok.find(pattern);
        while (pos != std::string_view::npos) {
            if (!needs_boundary || pos == 0 ||
                !std::isalnum(static_cast<unsigned char>(tok[pos - 1]))) {
                best = std::min(best, pos);
                return;
            }
            pos = tok.find(pattern, pos + 1);
        }
    };
    consider("http://", false);
    consider("https://", false);
    consider("www.", true);
    consider("t.co/", true);
    return best;
}

constexpr std::array<std::string_view, 30> kEmoticons = {
    ":)",  ":-)", ":(",  ":-(", ":d",  ":-d", ";)",  ";-)", ":p",  ":-p",
    ";p",  ":o",  ":-o", ":/",  ":-/", ":'(", ":')", "<3",  "</3", ":|",
    "=)",  "=(",  "=d",  ":]",  ":[",  "^_^", "-_-", ":*",  ":-*", "xd",
};

}  // namespace

bool is_emoji_codepoint(char32_t cp) {
    return (cp >= 0x1F000 && cp <= 0x1FAFF) ||  // mahjong .. symbols & pictographs ext-A
           (cp >= 0x2600 && cp <= 0x27BF) ||    // misc symbols, dingbats
           (cp >= 0x2300 && cp <= 0x23FF) ||    // misc technical (watch, hourglass, ...)
           (cp >= 0x2B00 && cp <= 0x2BFF) ||    // arrows, stars
           (cp >= 0x2190 && cp <= 0x21FF) ||    // arrows
           (cp >= 0xFE00 && cp <= 0xFE0F) ||    // variation selectors
           (cp >= 0xE0020 && cp <= 0xE007F) ||  // tag sequences
           cp == 0x200D || cp == 0x20E3 || cp == 0x3030 || cp == 0x303D ||
           cp == 0x3297 || cp == 0x3299 || cp == 0x00A9 || cp == 0x00AE ||
           cp == 0x2122;
}

bool is_emoticon(std::string_view token) {
    for (auto e : kEmoticons)
        if (token == e) return true;
    return false;
}

std::string strip_to_ascii(std::string_view utf8) {
    std::string out;
    out.reserve(utf8.size());
    for (std::size_t i = 0; i < utf8.size();) {
        char32_t cp = 0;
        const std::size_t len = decode_utf8(utf8, i, cp);
        i += len;
        if (is_emoji_codepoint(cp)) {
            out.push_back(' ');
        } else if (cp < 0x80) {
            const auto c = static_cast<char>(cp);
            if (cp == '\t' || cp == '\n' || cp == '\r' || cp == '\v' || cp == '\f')
                out.push_back(' ');
            else if (cp >= 0x20 && cp < 0x7F)
                out.push_back(c);
        }
    }
    return out;
}

Normalizer::Normalizer(const PhraseLists& lists, Lexicon lexicon)
    : segmenter_(lists, std::move(lexicon)) {}

void Normalizer::expand_mentions_and_tags(std::string_view tok, std::vector<std::string>& out) const {
    std::string buffer;
    auto flush = [&] {
        if (!buffer.empty()) out.push_back(std::move(buffer));
        buffer.clear();
    };
    for (std::size_t i = 0; i < tok.size();) {
        const char c = tok[i];
        if ((c == '@' || c == '#') && i + 1 < tok.size() && is_word_char(tok[i + 1])) {
            flush();
            std::size_t j = i + 1;
            while (j < tok.size() && is_word_char(tok[j])) ++j;
            const std::string_view body = tok.substr(i + 1, j - i - 1);
            if (c == '@') {
                out.emplace_back(kUserToken);
            } else {
                // underscores separate words inside a tag
                std::size_t start = 0;
                while (start <= body.size()) {
                    std::size_t stop = body.find('_', start);
                    if (stop == std::string_view::npos) stop = body.size();
                    for (auto& word : segmenter_.segment(body.substr(start, stop - start)))
                        out.push_back(std::move(word));
                    start = stop + 1;
                }
            }
            i = j;
        } else if (c == '#') {
            ++i;  // bare '#'
        } else {
            buffer.push_back(c);
            ++i;
        }
    }
    flush();
}

void Normalizer::expand_token(std::string_view tok, std::vector<std::string>& out) const {
    const std::size_t url = find_url_start(tok);
    if (url == std::string_view::npos) {
        expand_mentions_and_tags(tok, out);
        return;
    }
    expand_mentions_and_tags(tok.substr(0, url), out);
    out.emplace_back(kUrlToken);
}

std::vector<std::string> Normalizer::tokens(std::string_view raw) const {
    std::string text = strip_to_ascii(raw);
    for (auto& c : text) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));

    std::vector<std::string> expanded;
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && text[i] == ' ') ++i;
        std::size_t j = i;
        while (j < text.size() && text[j] != ' ') ++j;
        if (j > i) {
            std::string_view tok(text.data() + i, j - i);
            if (tok != "rt") expand_token(tok, expanded);
        }
        i = j;
    }

    std::vector<std::string> out;
    out.reserve(expanded.size());
    for (auto& tok : expanded) {
        if (tok.empty() || tok == "rt" || is_emoticon(tok)) continue;
        if (!out.empty() && out.back() == tok) continue;
        out.push_back(std::move(tok));
    }
    return out;
}

std::string Normalizer::normalize(std::string_view raw) const {
    std::string joined;
    for (const auto& tok : tokens(raw)) {
        if (!joined.empty()) joined.push_back(' ');
        joined += tok;
    }
    return joined;
}

std::string normalize_tweet(std::string_view raw, const PhraseLists& lists, const Lexicon& lexicon) {
    return Normalizer(lists, lexicon).normalize(raw);
}

}  // namespace softlabel
