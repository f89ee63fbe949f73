#include "softlabel/synth.hpp"

#include <cmath>
#include <numeric>

#include "softlabel/error.hpp"
#include "softlabel/rng.hpp"

namespace softlabel {

namespace {

constexpr std::array<const char*, 6> kMonths = {"2020-07", "2020-08", "2020-09",
                                                "2020-10", "2020-11", "2020-12"};

// Letters-only encoding of an index; avoids digits being split by the normalizer.
std::string letters(std::size_t n, std::size_t width) {
    std::string s(width, 'a');
    for (std::size_t i = width; i-- > 0;) {
        s[i] = static_cast<char>('a' + n % 26);
        n /= 26;
    }
    return s;
}

std::size_t width_for(std::size_t vocab) {
    std::size_t w = 2;
    std::size_t cap = 26 * 26;
    while (cap < vocab) {
        cap *= 26;
        ++w;
    }
    return w;
}

// P(category | Aggression != Not), from the marginal prior and P(Not).
std::vector<double> conditional_on_aggressive(const std::vector<double>& prior, double p_not) {
    std::vector<double> q(prior.size());
    for (std::size_t c = 0; c < prior.size(); ++c)
        q[c] = (prior[c] - (c == 0 ? p_not : 0.0)) / (1.0 - p_not);
    return q;
}

int draw(const std::vector<double>& probs, Rng& rng) {
    const double u = rng.uniform01();
    double acc = 0.0;
    for (std::size_t c = 0; c + 1 < probs.size(); ++c) {
        acc += probs[c];
        if (u < acc) return static_cast<int>(c);
    }
    return static_cast<int>(probs.size() - 1);
}

int noisy_vote(int truth, std::size_t categories, double eta, Rng& rng) {
    if (!rng.bernoulli(eta)) return truth;
    auto other = static_cast<int>(rng.uniform_index(categories - 1));
    return other >= truth ? other + 1 : other;
}

}  // namespace

std::array<std::vector<double>, 3> SynthSpec::default_priors() {
    constexpr double total = 2959.0;
    return {std::vector<double>{2187 / total, 691 / total, 81 / total},
            std::vector<double>{2505 / total, 454 / total},
            std::vector<double>{2373 / total, 354 / total, 232 / total}};
}

void SynthSpec::validate() const {
    if (num_tweets == 0) throw UsageError("synth: num_tweets must be > 0");
    if (signal_vocab == 0) throw UsageError("synth: signal_vocab must be > 0");
    if (annotators < 2) throw UsageError("synth: annotators must be >= 2");
    if (!(eta >= 0.0 && eta <= 1.0)) throw UsageError("synth: eta must be in [0, 1]");
    if (!(decoration_rate >= 0.0 && decoration_rate <= 1.0))
        throw UsageError("synth: decoration_rate must be in [0, 1]");
    for (auto a : kAttributes) {
        const auto& p = priors[static_cast<int>(a)];
        const std::string name(to_string(a));
        const bool size_ok = a == Attribute::Target ? (p.size() == 2 || p.size() == 4)
                                                    : p.size() == task_schema(a).size();
        if (!size_ok) throw UsageError("synth: priors." + name + " has the wrong number of entries");
        double sum = 0.0;
        for (double v : p) {
            if (!(v >= 0.0)) throw UsageError("synth: priors." + name + " must be non-negative");
            sum += v;
        }
        if (std::abs(sum - 1.0) > 1e-9) throw UsageError("synth: priors." + name + " must sum to 1");
    }
    const double p_not = priors[0][0];
    for (auto a : {Attribute::Target, Attribute::Type}) {
        const auto& p = priors[static_cast<int>(a)];
        if (p[0] < p_not - 1e-12)
            throw UsageError("synth: priors." + std::string(to_string(a)) +
                             " neutral share is below the not-aggressive share");
        if (p_not >= 1.0 - 1e-12 && std::abs(p[0] - 1.0) > 1e-9)
            throw UsageError("synth: priors." + std::string(to_string(a)) +
                             " must be all neutral when every tweet is not aggressive");
    }
}

std::string signal_token(Attribute a, int category, std::size_t index) {
    static constexpr const char* kPrefix[] = {"zqa", "zqt", "zqy"};
    return std::string(kPrefix[static_cast<int>(a)]) + static_cast<char>('a' + category) +
           letters(index, 2);
}

SynthCorpus generate(const SynthSpec& spec, const PhraseLists& lists) {
    spec.validate();
    Rng label_rng = Rng::derive(spec.seed, 1);
    Rng text_rng = Rng::derive(spec.seed, 2);
    Rng vote_rng = Rng::derive(spec.seed, 3);

    const double p_not = spec.priors[0][0];
    const std::vector<double> target_q = p_not < 1.0 ? conditional_on_aggressive(spec.priors[1], p_not)
                                                      : spec.priors[1];
    const std::vector<double> type_q = p_not < 1.0 ? conditional_on_aggressive(spec.priors[2], p_not)
                                                   : spec.priors[2];
    const std::size_t filler_width = width_for(spec.filler_vocab);
    const std::vector<std::string> anti_asian(lists.anti_asian.begin(), lists.anti_asian.end());

    SynthCorpus corpus;
    corpus.tweets.reserve(spec.num_tweets);
    corpus.records.reserve(spec.num_tweets);
    corpus.truth.reserve(spec.num_tweets);
    const std::size_t id_width = std::to_string(spec.num_tweets).size();

    for (std::size_t i = 0; i < spec.num_tweets; ++i) {
        std::string id = std::to_string(i + 1);
        id = "syn" + std::string(id_width - id.size(), '0') + id;

        TrueLabel truth{id, {}};
        truth.labels[0] = draw(spec.priors[0], label_rng);
        if (truth.labels[0] == 0) {
            truth.labels[1] = 0;
            truth.labels[2] = 0;
        } else {
            truth.labels[1] = draw(target_q, label_rng);
            truth.labels[2] = draw(type_q, label_rng);
        }

        std::vector<std::string> words;
        for (auto a : kAttributes)
            for (std::size_t k = 0; k < spec.signal_tokens; ++k)
                words.push_back(signal_token(a, truth.of(a), text_rng.uniform_index(spec.signal_vocab)));
        for (std::size_t k = 0; k < spec.filler_tokens && spec.filler_vocab > 0; ++k)
            words.push_back("zf" + letters(text_rng.uniform_index(spec.filler_vocab), filler_width));
        text_rng.shuffle(std::span<std::string>(words));

        std::string text;
        if (text_rng.bernoulli(spec.decoration_rate)) text += "RT @user" + letters(text_rng.uniform_index(50), 2) + ": ";
        for (std::size_t w = 0; w < words.size(); ++w) {
            if (w) text += ' ';
            text += words[w];
        }
        if (truth.labels[1] == target::kAntiAsian && !anti_asian.empty() &&
            text_rng.bernoulli(spec.decoration_rate))
            text += " " + anti_asian[text_rng.uniform_index(anti_asian.size())];
        if (text_rng.bernoulli(spec.decoration_rate)) text += " #covid19";
        if (text_rng.bernoulli(spec.decoration_rate))
            text += " https://t.co/" + letters(text_rng.uniform_index(26 * 26 * 26), 3);

        Tweet tweet;
        tweet.id = id;
        tweet.raw_text = std::move(text);
        tweet.month = kMonths[text_rng.uniform_index(kMonths.size())];
        tweet.category = categorize_tweet(tweet.raw_text, lists);

        AnnotationRecord record;
        record.tweet_id = id;
        for (auto a : kAttributes) {
            const std::size_t cats = a == Attribute::Target ? target_schema_full().size() : task_schema(a).size();
            auto& votes = record.of(a);
            votes.resize(spec.annotators);
            for (auto& v : votes) v = noisy_vote(truth.of(a), cats, spec.eta, vote_rng);
        }
        repair_hierarchy(record);

        corpus.tweets.push_back(std::move(tweet));
        corpus.records.push_back(std::move(record));
        corpus.truth.push_back(std::move(truth));
    }
    return corpus;
}

}  // namespace softlabel
