#include <benchmark/benchmark.h>

#include <string>
#include <vector>

#include "softlabel/annotations.hpp"
#include "softlabel/evaluation.hpp"
#include "softlabel/model.hpp"
#include "softlabel/preprocess.hpp"
#include "softlabel/rng.hpp"
#include "softlabel/segmenter.hpp"
#include "softlabel/synth.hpp"

using namespace softlabel;

namespace {

const Lexicon& lexicon() {
    static const Lexicon lex = Lexicon::load(SOFTLABEL_LEXICON);
    return lex;
}

std::vector<std::string> sample_tweets() {
    SynthSpec spec;
    spec.num_tweets = 256;
    spec.decoration_rate = 0.8;
    std::vector<std::string> out;
    for (const auto& t : generate(spec).tweets) out.push_back(t.raw_text);
    out.push_back("RT @someone: #StayHomeSaveLives and #WearAMask https://t.co/abc 🔥🔥 so so tired");
    return out;
}

void BM_Normalize(benchmark::State& state) {
    const Normalizer normalizer(PhraseLists::defaults(), lexicon());
    const auto tweets = sample_tweets();
    std::size_t i = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(normalizer.normalize(tweets[i]));
        i = (i + 1) % tweets.size();
    }
}
BENCHMARK(BM_Normalize);

void BM_SegmentHashtag(benchmark::State& state) {
    const HashtagSegmenter seg(PhraseLists::defaults(), lexicon());
    const std::vector<std::string> tags = {"stayhomesavelives", "blacklivesmatter", "wearamaskplease",
                                           "thisisaverylonghashtagwithmanywords", "xyzqq"};
    std::size_t i = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(seg.split(tags[i]));
        i = (i + 1) % tags.size();
    }
}
BENCHMARK(BM_SegmentHashtag);

std::vector<Sample> batch_for(const ModelConfig& cfg, std::size_t n) {
    Rng rng(1);
    std::vector<Sample> batch;
    for (std::size_t i = 0; i < n; ++i) {
        Sample s;
        std::string text;
        for (int w = 0; w < 12; ++w) text += "w" + std::to_string(rng.uniform_index(2000)) + " ";
        s.features = encode(text, cfg.encoder_dim);
        for (const auto& t : cfg.tasks) {
            std::vector<double> soft(t.num_categories, 1.0 / static_cast<double>(t.num_categories));
            s.soft.push_back(soft);
            s.silver.push_back(static_cast<int>(rng.uniform_index(t.num_categories)));
        }
        batch.push_back(std::move(s));
    }
    return batch;
}

void BM_ForwardBackward(benchmark::State& state) {
    const auto cfg = ModelConfig::multitask();
    Rng init(3);
    const auto params = ModelParams::initialize(cfg, init);
    const auto batch = batch_for(cfg, static_cast<std::size_t>(state.range(0)));
    LossConfig loss;
    std::uint64_t step = 0;
    for (auto _ : state) {
        auto g = backward(params, batch, loss, cfg, Mode::Train, Rng::derive(7, step++));
        benchmark::DoNotOptimize(g.loss.total);
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ForwardBackward)->Arg(1)->Arg(20);

void BM_FleissKappa(benchmark::State& state) {
    Rng rng(5);
    std::vector<std::vector<std::size_t>> rows(static_cast<std::size_t>(state.range(0)), std::vector<std::size_t>(3, 0));
    for (auto& r : rows)
        for (int v = 0; v < 3; ++v) ++r[rng.uniform_index(3)];
    for (auto _ : state) benchmark::DoNotOptimize(fleiss_kappa(rows, 3).kappa);
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_FleissKappa)->Arg(2959);

void BM_EnsembleVote(benchmark::State& state) {
    Rng rng(6);
    std::vector<std::vector<int>> votes(559, std::vector<int>(5));
    for (auto& v : votes)
        for (auto& x : v) x = static_cast<int>(rng.uniform_index(3));
    for (auto _ : state) benchmark::DoNotOptimize(ensemble_vote(Attribute::Aggression, votes).winners.data());
}
BENCHMARK(BM_EnsembleVote);

}  // namespace

BENCHMARK_MAIN();
