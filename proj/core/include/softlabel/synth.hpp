#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "softlabel/annotations.hpp"
#include "softlabel/phrases.hpp"
#include "softlabel/preprocess.hpp"

namespace softlabel {

struct SynthSpec {
    std::size_t num_tweets = 1000;
    /// Distinct signal tokens per (attribute, category).
    std::size_t signal_vocab = 6;
    std::size_t filler_vocab = 300;
    /// Signal tokens drawn per attribute per tweet.
    std::size_t signal_tokens = 3;
    std::size_t filler_tokens = 6;
    /// Probability of adding retweet / mention / URL / hashtag decoration.
    double decoration_rate = 0.3;
    /// True-category priors. Target takes either the binary (N/A, anti-Asian)
    /// or the full four-category form.
    std::array<std::vector<double>, 3> priors = default_priors();
    std::size_t annotators = 3;
    double eta = 0.0;
    std::uint64_t seed = 1;

    /// Adjusted corpus label frequencies.
    static std::array<std::vector<double>, 3> default_priors();

    /// Throws UsageError when priors do not sum to 1, have the wrong length,
    /// or cannot be met by hierarchy-consistent triples.
    void validate() const;
};

/// True (Aggression, Target, Type) triple; Target uses the full schema indices.
struct TrueLabel {
    std::string tweet_id;
    std::array<int, 3> labels{};

    int of(Attribute a) const { return labels[static_cast<int>(a)]; }
};

struct SynthCorpus {
    std::vector<Tweet> tweets;
    std::vector<AnnotationRecord> records;
    std::vector<TrueLabel> truth;
};

/// Signal token for one category of one attribute. Tokens are lowercase
/// letters only and disjoint across all (attribute, category, index).
std::string signal_token(Attribute a, int category, std::size_t index);

SynthCorpus generate(const SynthSpec& spec, const PhraseLists& lists = PhraseLists::defaults());

}  // namespace softlabel
