// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "softlabel/annotations.hpp"
#include "softlabel/error.hpp"
#include "softlabel/evaluation.hpp"
#include "softlabel/loss.hpp"
#include "softlabel/model.hpp"
#include "softlabel/preprocess.hpp"
#include "softlabel/records.hpp"
#include "softlabel/rng.hpp"
#include "softlabel/segmenter.hpp"
#include "softlabel/synth.hpp"
#include "softlabel/training.hpp"

using namespace softlabel;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = true;
    std::ostringstream detail;

    void require(bool ok, const std::string& what) {
        if (!ok) {
            if (pass) detail << "failed: ";
            else detail << "; ";
            detail << what;
            pass = false;
        }
    }
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::vector<std::vector<int>> all_profiles(std::size_t n, std::size_t k) {
    std::vector<std::vector<int>> out;
    std::vector<int> cur(n, 0);
    for (;;) {
        out.push_back(cur);
        std::size_t i = 0;
        while (i < n && ++cur[i] == static_cast<int>(k)) cur[i++] = 0;
        if (i == n) break;
    }
    return out;
}

std::vector<double> random_distribution(Rng& rng, std::size_t k) {
    std::vector<double> p(k);
    double sum = 0.0;
    for (auto& v : p) sum += (v = rng.uniform(0.01, 1.0));
    for (auto& v : p) v /= sum;
    return p;
}

// ---- 1 ----

void aggregation_oracle(Outcome& o) {
    const auto t0 = std::chrono::steady_clock::now();
    std::size_t checked = 0;
    for (const AttributeSchema* schema : {&aggression_schema(), &target_schema(), &type_schema()}) {
        const auto profiles = all_profiles(3, schema->size());
        o.require(profiles.size() == (schema->size() == 3 ? 27u : 8u), "profile count");
        for (const auto& votes : profiles) {
            std::vector<int> count(schema->size(), 0);
            for (int v : votes) ++count[static_cast<std::size_t>(v)];
            const int best = *std::max_element(count.begin(), count.end());
            int silver = -1, distinct = 0;
            bool tie = false;
            for (std::size_t c = 0; c < count.size(); ++c) {
                if (count[c] > 0) ++distinct;
                if (count[c] == best) {
                    tie = silver >= 0;
                    if (silver < 0) silver = static_cast<int>(c);
                }
            }
            // Three-way splits fall back to Somewhat Aggressive / Abusive (index 1).
            if (tie) silver = 1;
            const auto got = aggregate(votes, *schema);
            bool soft_ok = got.soft.size() == count.size();
            for (std::size_t c = 0; soft_ok && c < count.size(); ++c)
                soft_ok = got.soft[c] == static_cast<double>(count[c]) / 3.0;
            const auto cls = distinct == 1 ? AnnotationClass::A : distinct == 2 ? AnnotationClass::B : AnnotationClass::C;
            o.require(soft_ok && got.silver == silver && got.annot_class == cls, "mismatch on a vote profile");
            ++checked;
        }
    }
    const double t = seconds_since(t0);
    o.require(t < 1.0, "runtime >= 1 s");
    o.detail << checked << " profiles (27 + 8 + 27), " << t * 1e3 << " ms";
}

// ---- 2 ----

void class_weight_identity(Outcome& o) {
    Rng rng(2);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<std::size_t> counts(2 + rng.uniform_index(4));
        std::size_t total = 0;
        for (auto& c : counts) total += (c = 1 + rng.uniform_index(5000));
        const auto w = class_weights(counts);
        double sum = 0.0;
        for (std::size_t c = 0; c < counts.size(); ++c) sum += w[c] * static_cast<double>(counts[c]);
        worst = std::max(worst, std::abs(sum - static_cast<double>(total)));
    }
    o.require(worst <= 1e-9, "sum w_c s_c differs from S");
    const std::vector<std::size_t> table = {2505, 454};
    const auto w = class_weights(table);
    o.require(std::abs(w[0] - 0.5906) <= 1e-4 && std::abs(w[1] - 3.2588) <= 1e-4, "(2505, 454) weights");
    o.detail << "max |sum - S| = " << worst << "; (2505, 454) -> (" << w[0] << ", " << w[1] << ")";
}

// ---- 3 ----

void loss_identities(Outcome& o) {
    Rng rng(3);
    LossConfig cfg;
    cfg.kind = LossKind::KLNLL;
    cfg.alpha = 0.0;
    cfg.beta = 1.0;
    std::size_t mismatches = 0;
    double worst_kl = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const std::size_t k = 2 + rng.uniform_index(2);
        const auto p = random_distribution(rng, k);
        const auto soft = random_distribution(rng, k);
        const int silver = static_cast<int>(rng.uniform_index(k));
        const double w = rng.uniform(0.1, 5.0);
        const double a = loss_klnll(p, soft, silver, cfg, w);
        const double b = loss_ce(p, silver, w);
        if (std::memcmp(&a, &b, sizeof a) != 0) ++mismatches;
        worst_kl = std::max(worst_kl, std::abs(kl_divergence(soft, soft)));
    }
    o.require(mismatches == 0, std::to_string(mismatches) + " KLNLL/CE mismatches");
    o.require(worst_kl <= 1e-12, "KL(t,t) != 0");
    const std::vector<double> one_hot = {1.0, 0.0, 0.0};
    const auto t = kl_target(one_hot, true);
    o.require(std::abs(t[0] - 0.576) <= 1e-3 && std::abs(t[1] - 0.212) <= 1e-3 && std::abs(t[2] - 0.212) <= 1e-3,
              "softmaxed one-hot target");
    o.detail << "1000 triples bit-identical, max KL(t,t) = " << worst_kl << ", softmax(1,0,0) = (" << t[0] << ", "
             << t[1] << ", " << t[2] << ")";
}

// ---- 4 ----

double gradient_error(const ModelParams& params, std::span<const Sample> batch, const LossConfig& loss,
                      const ModelConfig& cfg, Rng mask) {
    std::vector<std::vector<double>> analytic;
    backward(params, batch, loss, cfg, Mode::Train, mask)
        .grads.for_each_tensor([&](std::string_view, int, const Tensor& t) { analytic.push_back(t.values); });
    ModelParams probe = params;
    std::vector<Tensor*> tensors;
    probe.for_each_tensor([&](std::string_view, int, Tensor& t) { tensors.push_back(&t); });
    const double h = 1e-5;
    double worst = 0.0;
    for (std::size_t ti = 0; ti < tensors.size(); ++ti) {
        for (std::size_t i = 0; i < tensors[ti]->values.size(); ++i) {
            double& x = tensors[ti]->values[i];
            const double saved = x;
            x = saved + h;
            const double up = batch_loss(probe, batch, loss, cfg, Mode::Train, mask).total;
            x = saved - h;
            const double down = batch_loss(probe, batch, loss, cfg, Mode::Train, mask).total;
            x = saved;
            const double fd = (up - down) / (2 * h);
            const double a = analytic[ti][i];
            worst = std::max(worst, std::abs(a - fd) / std::max({std::abs(a), std::abs(fd), 1e-6}));
        }
    }
    return worst;
}

void gradient_check(Outcome& o) {
    const auto t0 = std::chrono::steady_clock::now();
    Rng rng(4);
    double worst = 0.0;
    std::size_t runs = 0;
    for (int trial = 0; trial < 10; ++trial) {
        for (bool multitask : {false, true}) {
            for (auto kind : {LossKind::CE, LossKind::KLNLL}) {
                ModelConfig cfg = multitask ? ModelConfig::multitask() : ModelConfig::single(kAttributes[trial % 3]);
                cfg.encoder_dim = 256;
                cfg.hidden_dim = 16;
                cfg.intermediate_dim = 24;
                cfg.dropout_p = 0.2;
                Rng init(1000 + static_cast<std::uint64_t>(trial));
                const auto params = ModelParams::initialize(cfg, init);
                std::vector<Sample> batch;
                for (int i = 0; i < 4; ++i) {
                    Sample s;
                    std::string text;
                    for (int w = 0; w < 8; ++w) text += "w" + std::to_string(rng.uniform_index(500)) + " ";
                    s.features = encode(text, cfg.encoder_dim);
                    for (const auto& t : cfg.tasks) {
                        s.soft.push_back(random_distribution(rng, t.num_categories));
                        s.silver.push_back(static_cast<int>(rng.uniform_index(t.num_categories)));
                    }
                    batch.push_back(std::move(s));
                }
                LossConfig loss;
                loss.kind = kind;
                loss.alpha = rng.uniform(0.2, 1.5);
                loss.beta = rng.uniform(0.1, 1.0);
                loss.softmax_targets = rng.bernoulli(0.5);
                for (const auto& t : cfg.tasks) {
                    std::vector<double> w(t.num_categories);
                    for (auto& v : w) v = rng.uniform(0.3, 3.0);
                    loss.class_weights.push_back(w);
                    loss.task_lambdas.push_back(rng.uniform(0.1, 1.0));
                }
                worst = std::max(worst, gradient_error(params, batch, loss, cfg, Rng(rng.next_u64())));
                ++runs;
            }
        }
    }
    const double t = seconds_since(t0);
    o.require(worst < 1e-3, "max relative error >= 1e-3");
    o.require(t < 30.0, "runtime >= 30 s");
    o.detail << runs << " checks (10 configs x 2 losses x 2 regimes), max rel err " << worst << ", " << t << " s";
}

// ---- 5 ----

double direct_kappa(const std::vector<std::vector<std::size_t>>& rows, double n) {
    const double N = static_cast<double>(rows.size());
    std::vector<double> pj(rows[0].size(), 0.0);
    double pbar = 0.0;
    for (const auto& r : rows) {
        double agree = 0.0;
        for (std::size_t j = 0; j < r.size(); ++j) {
            const double c = static_cast<double>(r[j]);
            agree += c * (c - 1);
            pj[j] += c / (N * n);
        }
        pbar += agree / (n * (n - 1)) / N;
    }
    double pe = 0.0;
    for (double p : pj) pe += p * p;
    return (pbar - pe) / (1 - pe);
}

void kappa_oracle(Outcome& o) {
    const std::vector<std::vector<std::size_t>> rows = {{2, 1}, {1, 2}};
    const double k = fleiss_kappa(rows, 3).kappa;
    const double oracle = direct_kappa(rows, 3);
    o.require(std::abs(k + 1.0 / 3.0) <= 1e-9 && std::abs(k - oracle) <= 1e-9, "[(2,1),(1,2)] kappa");
    const std::vector<std::vector<std::size_t>> unanimous = {{3, 0, 0}, {0, 3, 0}, {0, 0, 3}, {3, 0, 0}};
    const double ku = fleiss_kappa(unanimous, 3).kappa;
    o.require(ku == 1.0, "unanimous corpus kappa");
    SynthSpec spec;
    spec.num_tweets = 500;
    spec.eta = 0.0;
    const auto corpus = label_corpus(generate(spec).records);
    bool all_one = corpus.stats.target_kappa_full.kappa == 1.0;
    for (const auto& a : corpus.stats.attributes) all_one = all_one && a.kappa.kappa == 1.0;
    o.require(all_one, "synthetic eta=0 kappa");
    o.detail << "kappa " << k << " (direct " << oracle << "), unanimous " << ku << ", synthetic eta=0 all 1.0: "
             << (all_one ? "yes" : "no");
}

// ---- 6 ----

int table_winner(Attribute a, int x, int y) {
    const int lo = std::min(x, y), hi = std::max(x, y);
    if (a == Attribute::Target) return 0;
    if (lo == 0) return 0;         // (Not, *) and (Normal, *)
    return hi == 2 ? 1 : lo;       // (Somewhat, Very) / (Abusive, Hate)
}

int brute_vote(Attribute a, const std::vector<int>& votes, std::size_t k) {
    std::vector<int> count(k, 0);
    for (int v : votes) ++count[static_cast<std::size_t>(v)];
    const int best = *std::max_element(count.begin(), count.end());
    std::vector<int> leaders;
    for (std::size_t c = 0; c < k; ++c)
        if (count[c] == best) leaders.push_back(static_cast<int>(c));
    int w = leaders[0];
    for (std::size_t i = 1; i < leaders.size(); ++i) w = table_winner(a, w, leaders[i]);
    return w;
}

void ensemble_oracle(Outcome& o) {
    const auto profiles = all_profiles(5, 3);
    std::size_t mismatches = 0;
    for (auto a : {Attribute::Aggression, Attribute::Type}) {
        const auto out = ensemble_vote(a, profiles);
        for (std::size_t i = 0; i < profiles.size(); ++i)
            if (out.winners[i] != brute_vote(a, profiles[i], 3)) ++mismatches;
    }
    o.require(profiles.size() == 243 && mismatches == 0, std::to_string(mismatches) + " vote mismatches");
    Rng rng(6);
    std::vector<int> agg, tgt, typ;
    std::size_t brute = 0;
    for (int i = 0; i < 10000; ++i) {
        agg.push_back(static_cast<int>(rng.uniform_index(3)));
        tgt.push_back(static_cast<int>(rng.uniform_index(2)));
        typ.push_back(static_cast<int>(rng.uniform_index(3)));
        if (agg.back() == 0 && (tgt.back() != 0 || typ.back() != 0)) ++brute;
    }
    const auto got = contradiction_count(agg, tgt, typ);
    o.require(got == brute, "contradiction count");
    o.detail << "243 profiles x 2 attributes, " << mismatches << " mismatches; contradictions " << got
             << " (brute force " << brute << ")";
}

// ---- 7 ----

void end_to_end(Outcome& o) {
    SynthSpec spec;
    spec.num_tweets = 750;
    spec.eta = 0.0;
    spec.seed = 7;
    const auto corpus = generate(spec);
    const auto labeled = label_corpus(corpus.records);
    const Normalizer normalizer(PhraseLists::defaults(), Lexicon::load(SOFTLABEL_LEXICON));
    const auto texts = tweet_texts(corpus.tweets, normalizer);

    TrainConfig cfg;  // multitask KLNLL defaults
    cfg.epochs = 20;
    const auto model = cfg.model_config(ModelConfig{});
    const auto samples = build_samples(labeled.examples, texts, model);
    const auto [train_idx, test_idx] = split_indices(samples.size(), SplitSpec{});
    std::vector<Sample> train_set, test_set;
    for (auto i : train_idx) train_set.push_back(samples[i]);
    for (auto i : test_idx) test_set.push_back(samples[i]);
    o.require(train_set.size() == 600 && test_set.size() == 150, "split is not 600/150");
    o.detail << train_set.size() << "/" << test_set.size();

    for (std::uint64_t seed : {1, 2, 3}) {
        cfg.seed = seed;
        const auto t0 = std::chrono::steady_clock::now();
        const auto result = train(train_set, cfg, model);
        const double t = seconds_since(t0);
        const auto report = evaluate_predictions(gold_labels(test_set, model), predict_all(result.params, test_set, model));
        o.detail << "; seed " << seed << ":";
        for (const auto& task : report.tasks) {
            o.detail << " " << to_string(task.attribute) << " " << task.metrics.macro.f1;
            o.require(task.metrics.macro.f1 >= 0.95, "seed " + std::to_string(seed) + " " +
                                                         std::string(to_string(task.attribute)) + " F1 < 0.95");
        }
        o.require(!result.diverged && result.history.size() == 20, "seed " + std::to_string(seed) + " incomplete");
        o.require(!result.history.empty() && result.history.back().combined < result.history.front().combined,
                  "seed " + std::to_string(seed) + " final loss not below first");
        o.require(t < 60.0, "seed " + std::to_string(seed) + " took >= 60 s");
        o.detail << ", loss " << result.history.front().combined << " -> " << result.history.back().combined << ", "
                 << t << " s";
    }
}

// ---- 8 ----

#ifdef SOFTLABEL_CLI
int shell(const std::string& cmd) {
    const int rc = std::system((cmd + " > /dev/null 2>&1").c_str());
    return rc;
}

std::string quote(const fs::path& p) { return "'" + p.string() + "'"; }
#endif

void determinism(Outcome& o) {
#ifndef SOFTLABEL_CLI
    o.require(false, "built without the command-line tool");
#else
    const fs::path work = fs::temp_directory_path() / ("softlabel-acceptance-" + std::to_string(::getpid()));
    fs::remove_all(work);
    fs::create_directories(work);
    const std::string cli = quote(SOFTLABEL_CLI);
    const auto w = [&](const char* rel) { return quote(work / rel); };
    o.require(shell(cli + " synth --n 300 --eta 0.2 --seed 11 --out " + w("synth")) == 0, "synth failed");
    o.require(shell(cli + " aggregate --annotations " + w("synth/annotations.jsonl") + " --out " + w("labeled")) == 0,
              "aggregate failed");
    o.require(shell(cli + " train --tweets " + w("synth/tweets.jsonl") + " --labeled " + w("labeled/labeled.jsonl") +
                    " --seeds 1,2 --train.epochs 5 --jobs 2 --out " + w("run")) == 0,
              "train failed");
    for (const char* out : {"replay-a", "replay-b"})
        o.require(shell(cli + " train --config " + w("run/manifest.json") + " --out " + quote(work / out)) == 0,
                  std::string(out) + " failed");
    std::size_t compared = 0;
    if (o.pass) {
        for (const char* f : {"seed-1/predictions.jsonl", "seed-2/predictions.jsonl", "seed-1/metrics.json",
                              "seed-2/metrics.json", "split.json"}) {
            const auto a = read_file(work / "replay-a" / f);
            o.require(a == read_file(work / "replay-b" / f), std::string(f) + " differs between replays");
            o.require(a == read_file(work / "run" / f), std::string(f) + " differs from the original run");
            ++compared;
        }
    }
    fs::remove_all(work);
    o.detail << compared << " artifacts byte-identical across the original run and two manifest replays";
#endif
}

// ---- 9 ----

void metric_oracle(Outcome& o) {
    const auto m = macro_prf(ConfusionMatrix::from_rows({{2, 0}, {1, 1}}));
    // P = (2/3 + 1)/2, R = (1 + 1/2)/2, F1 = (0.8 + 2/3)/2
    o.require(std::abs(m.macro.f1 - 0.7333) <= 1e-4 && std::abs(m.macro.precision - 0.8333) <= 1e-4 &&
                  std::abs(m.macro.recall - 0.75) <= 1e-4,
              "[[2,0],[1,1]]");
    bool ones = true;
    Rng rng(9);
    for (std::size_t k = 2; k <= 5; ++k) {
        std::vector<std::vector<std::size_t>> rows(k, std::vector<std::size_t>(k, 0));
        for (std::size_t c = 0; c < k; ++c) rows[c][c] = 1 + rng.uniform_index(50);
        const auto d = macro_prf(ConfusionMatrix::from_rows(rows));
        ones = ones && d.macro.precision == 1.0 && d.macro.recall == 1.0 && d.macro.f1 == 1.0;
        for (const auto& c : d.per_category) ones = ones && c.precision == 1.0 && c.recall == 1.0 && c.f1 == 1.0;
    }
    o.require(ones, "diagonal matrices");
    o.detail << "macro P " << m.macro.precision << " R " << m.macro.recall << " F1 " << m.macro.f1
             << "; diagonal 2x2..5x5 all ones";
}

// ---- 10 ----

void preprocessing(Outcome& o) {
    const Normalizer normalizer(PhraseLists::defaults(), Lexicon::load(SOFTLABEL_LEXICON));
    o.require(normalizer.normalize("a a a") == "a", "\"a a a\"");
    const auto rows = read_jsonl(fs::path(SOFTLABEL_TEST_DATA) / "normalize_golden.jsonl");
    std::size_t passed = 0, idempotent = 0;
    for (const auto& row : rows) {
        const auto raw = row.at("raw").get<std::string>();
        const auto expected = row.at("expected").get<std::string>();
        const auto got = normalizer.normalize(raw);
        if (got == expected) ++passed;
        if (normalizer.normalize(got) == got && normalizer.normalize(expected) == expected) ++idempotent;
    }
    o.require(rows.size() >= 20, "golden file has fewer than 20 cases");
    o.require(passed == rows.size(), std::to_string(rows.size() - passed) + " golden cases differ");
    o.require(idempotent == rows.size(), "normalize not idempotent on the golden set");
    o.detail << passed << "/" << rows.size() << " golden cases, idempotent on " << idempotent << "/" << rows.size();
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<void(Outcome&)>>> criteria = {
        {"aggregation oracle", aggregation_oracle},
        {"class-weight identity", class_weight_identity},
        {"loss identities", loss_identities},
        {"gradient check", gradient_check},
        {"Fleiss kappa oracle", kappa_oracle},
        {"ensemble oracle", ensemble_oracle},
        {"end-to-end learning", end_to_end},
        {"determinism", determinism},
        {"metric oracle", metric_oracle},
        {"preprocessing conformance", preprocessing},
    };
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            criteria[i].second(o);
        } catch (const std::exception& e) {
            o.require(false, std::string("exception: ") + e.what());
        }
        std::cout << (o.pass ? "PASS" : "FAIL") << "  " << (i + 1) << ". " << criteria[i].first << ": "
                  << o.detail.str() << std::endl;
        if (!o.pass) ++failures;
    }
    std::cout << (criteria.size() - static_cast<std::size_t>(failures)) << "/" << criteria.size()
              << " criteria passed\n";
    return failures == 0 ? 0 : 1;
}
