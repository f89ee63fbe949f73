#include "commands.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "softlabel/annotations.hpp"
#include "softlabel/checkpoint.hpp"
#include "softlabel/error.hpp"
#include "softlabel/evaluation.hpp"
#include "softlabel/phrases.hpp"
#include "softlabel/preprocess.hpp"
#include "softlabel/records.hpp"
#include "softlabel/sampling.hpp"
#include "softlabel/segmenter.hpp"
#include "softlabel/synth.hpp"
#include "softlabel/training.hpp"

#ifndef SOFTLABEL_DEFAULT_LEXICON
#define SOFTLABEL_DEFAULT_LEXICON ""
#endif

namespace softlabel::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string fmt(double v) { return json(v).dump(); }

std::string join(const std::vector<std::string>& items) {
    std::string out;
    for (const auto& s : items) out += (out.empty() ? "" : ",") + s;
    return out;
}

std::string default_lexicon() {
    if (const char* env = std::getenv("SOFTLABEL_LEXICON"); env && *env) return env;
    return SOFTLABEL_DEFAULT_LEXICON;
}

// Collects checksums of inputs and outputs and writes manifest.json last.
class Run {
public:
    Run(std::string command, Settings& settings, fs::path out)
        : command_(std::move(command)), settings_(settings), out_(std::move(out)),
          start_(std::chrono::steady_clock::now()), started_at_(std::time(nullptr)) {}

    const fs::path& out() const { return out_; }

    void input(const std::string& role, const fs::path& path) {
        const auto bytes = read_file(path);
        std::lock_guard lock(mu_);
        inputs_[role + ":" + path.string()] = checksum(bytes);
    }

    void output(const std::string& relative, const std::string& contents) {
        write_file_atomic(out_ / relative, contents);
        std::lock_guard lock(mu_);
        outputs_[relative] = checksum(contents);
    }

    void set_seeds(std::vector<std::uint64_t> seeds) { seeds_ = std::move(seeds); }

    void finish() {
        const double seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
        std::ostringstream stamp;
        stamp << std::put_time(std::gmtime(&started_at_), "%Y-%m-%dT%H:%M:%SZ");
        json config = json::object();
        for (const auto& [k, v] : settings_.resolved()) config[k] = v;
        json inputs = json::array();
        for (const auto& [key, sum] : inputs_) {
            const auto colon = key.find(':');
            inputs.push_back({{"role", key.substr(0, colon)}, {"path", key.substr(colon + 1)}, {"checksum", sum}});
        }
        json manifest = {{"command", command_},
                         {"config", std::move(config)},
                         {"inputs", std::move(inputs)},
                         {"outputs", outputs_},
                         {"seeds", seeds_},
                         {"started_at", stamp.str()},
                         {"wall_clock_seconds", seconds}};
        write_file_atomic(out_ / "manifest.json", manifest.dump(2) + "\n");
    }

private:
    std::string command_;
    Settings& settings_;
    fs::path out_;
    std::chrono::steady_clock::time_point start_;
    std::time_t started_at_;
    std::mutex mu_;
    std::map<std::string, std::string> inputs_;
    std::map<std::string, std::string> outputs_;
    std::vector<std::uint64_t> seeds_;
};

// ---- key groups ----

KeySpec out_key(const std::string& def) { return {"io.out", def, "output directory", {"out"}}; }

std::vector<KeySpec> phrase_keys() {
    return {
        {"phrases.anti_asian", "", "anti-Asian phrase file (default: bundled list)", {}},
        {"phrases.anti_black", "", "anti-Black phrase file (default: none)", {}},
        {"phrases.tracking", "", "collection keyword file (default: bundled list)", {}},
    };
}

std::vector<KeySpec> text_keys() {
    auto k = phrase_keys();
    k.push_back({"lexicon", default_lexicon(), "word<TAB>count lexicon for hashtag segmentation", {}});
    return k;
}

std::vector<KeySpec> train_keys() {
    return {
        {"preset", "", "pretrained-single-task or pretrained-multitask; explicit keys override it", {}},
        {"regime", "multitask", "multitask or single", {}},
        {"task", "type", "task of the single regime: aggression, target or type", {}},
        {"loss", "klnll", "klnll or ce", {}},
        {"loss.alpha", "1", "KL weight", {"alpha"}},
        {"loss.beta", "0.2", "NLL weight", {"beta"}},
        {"loss.softmax_targets", "true", "softmax the soft label before the KL term", {}},
        {"loss.kl_direction", "target-first", "target-first or prediction-first", {}},
        {"loss.class_weights", "true", "weight the NLL/CE term by inverse class frequency", {}},
        {"train.lr", "0.01", "learning rate", {"lr"}},
        {"train.head_lr.aggression", "", "Aggression head learning rate override", {}},
        {"train.head_lr.target", "", "Target head learning rate override", {}},
        {"train.head_lr.type", "", "Type head learning rate override", {}},
        {"train.lambdas", "", "task weights, one per model task (default 1 each)", {}},
        {"train.batch_size", "20", "mini-batch size", {}},
        {"train.epochs", "20", "epochs", {}},
        {"train.seeds", "1", "comma-separated training seeds", {"seeds"}},
        {"train.beta1", "0.9", "AdamW beta1", {}},
        {"train.beta2", "0.999", "AdamW beta2", {}},
        {"train.eps", "1e-08", "AdamW epsilon", {}},
        {"train.weight_decay", "0.01", "AdamW decoupled weight decay", {}},
        {"model.encoder_dim", "4096", "hashed feature dimension", {}},
        {"model.hidden_dim", "64", "encoder output dimension", {}},
        {"model.intermediate_dim", "364", "trunk width", {}},
        {"model.dropout", "0.2", "dropout probability", {}},
        {"split.train_fraction", "0.8", "train share of the labeled corpus", {}},
        {"split.folds", "4", "cross-validation folds", {}},
        {"split.seed", "1", "split and fold seed", {}},
        {"jobs", "1", "parallel runs (seeds, grid points)", {}},
    };
}

template <typename... Groups>
std::vector<KeySpec> keys(Groups... groups) {
    std::vector<KeySpec> out;
    (out.insert(out.end(), groups.begin(), groups.end()), ...);
    return out;
}

// ---- shared loaders ----

PhraseLists load_lists(const Settings& s, Run* run) {
    PhraseLists lists = PhraseLists::defaults();
    auto load = [&](const std::string& key, std::set<std::string>& target) {
        if (!s.has(key)) return;
        target = load_phrase_file(s.path(key));
        if (run) run->input(key, s.path(key));
    };
    load("phrases.anti_asian", lists.anti_asian);
    load("phrases.anti_black", lists.anti_black);
    load("phrases.tracking", lists.tracking_keywords);
    lists.validate();
    return lists;
}

Lexicon load_lexicon(const Settings& s) {
    if (!s.has("lexicon")) throw UsageError("--lexicon is required (or set SOFTLABEL_LEXICON)");
    return Lexicon::load(s.path("lexicon"));
}

std::unordered_map<std::string, std::string> texts_for(const std::vector<Tweet>& tweets, const Settings& s,
                                                       Run& run) {
    const bool complete = std::all_of(tweets.begin(), tweets.end(), [](const Tweet& t) { return !t.text.empty(); });
    if (complete) {
        std::unordered_map<std::string, std::string> out;
        for (const auto& t : tweets) out[t.id] = t.text;
        return out;
    }
    run.input("lexicon", s.path("lexicon"));
    const Normalizer normalizer(load_lists(s, &run), load_lexicon(s));
    return tweet_texts(tweets, normalizer);
}

Regime parse_regime(const std::string& v) {
    if (v == "multitask") return Regime::Multitask;
    if (v == "single") return Regime::Single;
    throw UsageError("--regime: expected multitask or single, got '" + v + "'");
}

LossKind parse_loss(const std::string& v) {
    if (v == "klnll") return LossKind::KLNLL;
    if (v == "ce") return LossKind::CE;
    throw UsageError("--loss: expected klnll or ce, got '" + v + "'");
}

KlDirection parse_direction(const std::string& v) {
    if (v == "target-first") return KlDirection::TargetFirst;
    if (v == "prediction-first") return KlDirection::PredictionFirst;
    throw UsageError("--loss.kl_direction: expected target-first or prediction-first, got '" + v + "'");
}

std::vector<Attribute> task_order(const TrainConfig& cfg) {
    if (cfg.regime == Regime::Single) return {cfg.task};
    return {kAttributes.begin(), kAttributes.end()};
}

// Effective training keys of a configuration, in the form accepted by Settings.
std::map<std::string, std::string> describe(const TrainConfig& cfg, const ModelConfig& model) {
    std::map<std::string, std::string> m;
    m["preset"] = "";
    m["regime"] = cfg.regime == Regime::Single ? "single" : "multitask";
    m["task"] = std::string(to_string(cfg.task));
    m["loss"] = cfg.loss.kind == LossKind::CE ? "ce" : "klnll";
    m["loss.alpha"] = fmt(cfg.loss.alpha);
    m["loss.beta"] = fmt(cfg.loss.beta);
    m["loss.softmax_targets"] = cfg.loss.softmax_targets ? "true" : "false";
    m["loss.kl_direction"] = cfg.loss.kl_direction == KlDirection::TargetFirst ? "target-first" : "prediction-first";
    m["loss.class_weights"] = cfg.use_class_weights ? "true" : "false";
    m["train.lr"] = fmt(cfg.learning_rate);
    for (auto a : kAttributes) {
        auto it = cfg.head_learning_rates.find(a);
        m["train.head_lr." + std::string(to_string(a))] = it == cfg.head_learning_rates.end() ? "" : fmt(it->second);
    }
    std::vector<std::string> lambdas;
    for (auto a : task_order(cfg)) {
        auto it = cfg.task_lambdas.find(a);
        lambdas.push_back(fmt(it == cfg.task_lambdas.end() ? 1.0 : it->second));
    }
    m["train.lambdas"] = join(lambdas);
    m["train.batch_size"] = std::to_string(cfg.batch_size);
    m["train.epochs"] = std::to_string(cfg.epochs);
    m["train.beta1"] = fmt(cfg.beta1);
    m["train.beta2"] = fmt(cfg.beta2);
    m["train.eps"] = fmt(cfg.epsilon);
    m["train.weight_decay"] = fmt(cfg.weight_decay);
    m["model.encoder_dim"] = std::to_string(model.encoder_dim);
    m["model.hidden_dim"] = std::to_string(model.hidden_dim);
    m["model.intermediate_dim"] = std::to_string(model.intermediate_dim);
    m["model.dropout"] = fmt(model.dropout_p);
    return m;
}

struct TrainSetup {
    TrainConfig cfg;
    ModelConfig model;
    SplitSpec split;
    std::vector<std::uint64_t> seeds;
    std::size_t jobs = 1;
};

// Presets are applied first; keys given on the command line or in a config
// file override them. The effective values are written back into s so the
// manifest records them with the preset expanded.
TrainSetup resolve_training(Settings& s) {
    TrainSetup out;
    const std::string preset = s.str("preset");
    const Regime regime = parse_regime(s.str("regime"));
    const Attribute task = parse_attribute(s.str("task"));
    const LossKind kind = parse_loss(s.str("loss"));

    TrainConfig& cfg = out.cfg;
    if (preset == "pretrained-single-task") {
        if (s.explicitly_set("regime") && regime != Regime::Single)
            throw UsageError("--preset pretrained-single-task conflicts with --regime multitask");
        cfg = TrainConfig::pretrained_single_task(task, kind);
    } else if (preset == "pretrained-multitask") {
        if (s.explicitly_set("regime") && regime != Regime::Multitask)
            throw UsageError("--preset pretrained-multitask conflicts with --regime single");
        cfg = TrainConfig::pretrained_multitask(kind);
    } else if (!preset.empty()) {
        throw UsageError("--preset: unknown preset '" + preset + "'");
    } else {
        cfg.regime = regime;
    }
    cfg.task = task;
    cfg.loss.kind = kind;
    auto want = [&](const std::string& key) { return preset.empty() || s.explicitly_set(key); };

    if (want("loss.alpha")) cfg.loss.alpha = s.real("loss.alpha");
    if (want("loss.beta")) cfg.loss.beta = s.real("loss.beta");
    if (want("loss.softmax_targets")) cfg.loss.softmax_targets = s.flag("loss.softmax_targets");
    if (want("loss.kl_direction")) cfg.loss.kl_direction = parse_direction(s.str("loss.kl_direction"));
    if (want("loss.class_weights")) cfg.use_class_weights = s.flag("loss.class_weights");
    if (want("train.lr")) cfg.learning_rate = s.real("train.lr");
    for (auto a : kAttributes) {
        const std::string key = "train.head_lr." + std::string(to_string(a));
        if (!want(key)) continue;
        if (s.has(key))
            cfg.head_learning_rates[a] = s.real(key);
        else
            cfg.head_learning_rates.erase(a);
    }
    const auto order = task_order(cfg);
    if (want("train.lambdas")) {
        const auto lambdas = s.real_list("train.lambdas");
        cfg.task_lambdas.clear();
        if (!lambdas.empty()) {
            if (lambdas.size() != order.size())
                throw UsageError("--train.lambdas: expected " + std::to_string(order.size()) + " values, got " +
                                 std::to_string(lambdas.size()));
            for (std::size_t t = 0; t < order.size(); ++t) cfg.task_lambdas[order[t]] = lambdas[t];
        }
    }
    // Lambdas and head rates of tasks outside the model are irrelevant.
    std::erase_if(cfg.task_lambdas, [&](const auto& kv) { return std::find(order.begin(), order.end(), kv.first) == order.end(); });
    std::erase_if(cfg.head_learning_rates, [&](const auto& kv) { return std::find(order.begin(), order.end(), kv.first) == order.end(); });
    if (want("train.batch_size")) cfg.batch_size = s.count("train.batch_size");
    if (want("train.epochs")) cfg.epochs = s.count("train.epochs");
    if (want("train.beta1")) cfg.beta1 = s.real("train.beta1");
    if (want("train.beta2")) cfg.beta2 = s.real("train.beta2");
    if (want("train.eps")) cfg.epsilon = s.real("train.eps");
    if (want("train.weight_decay")) cfg.weight_decay = s.real("train.weight_decay");
    cfg.validate();

    ModelConfig base;
    base.encoder_dim = s.count("model.encoder_dim");
    base.hidden_dim = s.count("model.hidden_dim");
    base.intermediate_dim = s.count("model.intermediate_dim");
    base.dropout_p = s.real("model.dropout");
    out.model = cfg.model_config(base);
    out.model.validate();

    out.split.train_fraction = s.real("split.train_fraction");
    out.split.folds = s.count("split.folds");
    out.split.seed = s.seed("split.seed");
    out.split.validate();

    out.seeds = s.seed_list("train.seeds");
    if (out.seeds.empty()) throw UsageError("--train.seeds: at least one seed is required");
    if (std::set<std::uint64_t>(out.seeds.begin(), out.seeds.end()).size() != out.seeds.size())
        throw UsageError("--train.seeds: duplicate seed");
    out.jobs = std::max<std::size_t>(1, s.count("jobs"));

    for (const auto& [k, v] : describe(cfg, out.model)) s.set(k, v);
    return out;
}

struct LabeledData {
    std::vector<LabeledExample> examples;
    std::vector<Sample> samples;
    std::vector<std::size_t> train_idx, test_idx;
};

LabeledData load_training_data(Settings& s, const TrainSetup& setup, Run& run) {
    const auto tweets_path = s.required_path("io.tweets");
    const auto labeled_path = s.required_path("io.labeled");
    run.input("io.tweets", tweets_path);
    run.input("io.labeled", labeled_path);
    LabeledData d;
    const auto tweets = read_tweets(tweets_path);
    d.examples = read_labeled(labeled_path);
    const auto texts = texts_for(tweets, s, run);
    d.samples = build_samples(d.examples, texts, setup.model);
    std::tie(d.train_idx, d.test_idx) = split_indices(d.samples.size(), setup.split);
    return d;
}

std::vector<Sample> pick(const std::vector<Sample>& all, const std::vector<std::size_t>& idx) {
    std::vector<Sample> out;
    out.reserve(idx.size());
    for (auto i : idx) out.push_back(all[i]);
    return out;
}

// ---- gold labels for evaluation ----

std::unordered_map<std::string, const LabeledExample*> index_labeled(const std::vector<LabeledExample>& labeled) {
    std::unordered_map<std::string, const LabeledExample*> by_id;
    for (const auto& e : labeled) by_id[e.tweet_id] = &e;
    return by_id;
}

std::vector<TaskPredictions> gold_for(const std::vector<PredictionRecord>& preds,
                                      const std::vector<LabeledExample>& labeled, const fs::path& source) {
    if (preds.empty()) throw DataError(source.string() + ": no predictions");
    const auto by_id = index_labeled(labeled);
    std::vector<TaskPredictions> gold;
    for (auto a : preds.front().attributes) gold.push_back({a, {}});
    for (const auto& p : preds) {
        auto it = by_id.find(p.tweet_id);
        if (it == by_id.end())
            throw DataError(source.string() + ": tweet_id '" + p.tweet_id + "' has no gold label");
        for (auto& g : gold) g.predicted.push_back(it->second->of(g.attribute).silver);
    }
    return gold;
}

std::vector<TaskPredictions> as_tasks(const std::vector<PredictionRecord>& preds, const fs::path& source) {
    std::vector<TaskPredictions> out;
    if (preds.empty()) return out;
    for (auto a : preds.front().attributes) out.push_back({a, {}});
    for (const auto& p : preds) {
        if (p.attributes != preds.front().attributes)
            throw DataError(source.string() + ": tweet '" + p.tweet_id + "' predicts a different task set");
        for (std::size_t t = 0; t < out.size(); ++t) out[t].predicted.push_back(p.predicted[t]);
    }
    return out;
}

// Every file must cover the same tweets in the same order.
void check_aligned(const std::vector<std::vector<PredictionRecord>>& sets, const std::vector<fs::path>& files) {
    for (std::size_t s = 1; s < sets.size(); ++s) {
        if (sets[s].size() != sets[0].size())
            throw DataError(files[s].string() + ": " + std::to_string(sets[s].size()) + " predictions, expected " +
                            std::to_string(sets[0].size()));
        for (std::size_t i = 0; i < sets[s].size(); ++i) {
            if (sets[s][i].tweet_id != sets[0][i].tweet_id)
                throw DataError(files[s].string() + ": line " + std::to_string(i + 1) + " has tweet_id '" +
                                sets[s][i].tweet_id + "', expected '" + sets[0][i].tweet_id + "'");
            if (sets[s][i].attributes != sets[0][i].attributes)
                throw DataError(files[s].string() + ": tweet '" + sets[s][i].tweet_id + "' predicts a different task set");
        }
    }
}

std::string kappa_text(const KappaResult& k) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(4) << k.kappa;
    if (k.degenerate) os << " (degenerate: one category used)";
    return os.str();
}

// ---- commands ----

int cmd_synth(Settings& s) {
    SynthSpec spec;
    spec.num_tweets = s.count("synth.n");
    spec.eta = s.real("synth.eta");
    spec.seed = s.seed("synth.seed");
    spec.annotators = s.count("synth.annotators");
    spec.signal_vocab = s.count("synth.signal_vocab");
    spec.signal_tokens = s.count("synth.signal_tokens");
    spec.filler_vocab = s.count("synth.filler_vocab");
    spec.filler_tokens = s.count("synth.filler_tokens");
    spec.decoration_rate = s.real("synth.decoration_rate");
    spec.validate();
    Run run("synth", s, s.path("io.out"));
    const auto corpus = generate(spec, load_lists(s, &run));
    run.output("tweets.jsonl", jsonl_string(to_json_rows(corpus.tweets)));
    run.output("annotations.jsonl", jsonl_string(to_json_rows(corpus.records)));
    run.output("truth.jsonl", jsonl_string(to_json_rows(corpus.truth)));
    run.set_seeds({spec.seed});
    run.finish();
    std::cout << "synth: " << corpus.tweets.size() << " tweets, " << spec.annotators << " annotators, eta "
              << spec.eta << " -> " << run.out().string() << "\n";
    return 0;
}

int cmd_preprocess(Settings& s) {
    const auto in = s.required_path("io.tweets");
    Run run("preprocess", s, s.path("io.out"));
    run.input("io.tweets", in);
    run.input("lexicon", s.path("lexicon"));
    auto tweets = read_tweets(in);
    const auto lists = load_lists(s, &run);
    const Normalizer normalizer(lists, load_lexicon(s));
    std::array<std::size_t, 4> per_category{};
    for (auto& t : tweets) {
        t.category = categorize_tweet(t.raw_text, lists);
        t.text = normalizer.normalize(t.raw_text);
        ++per_category[static_cast<int>(t.category)];
    }
    run.output("tweets.jsonl", jsonl_string(to_json_rows(tweets)));
    run.finish();
    std::cout << "preprocess: " << tweets.size() << " tweets";
    for (auto c : kTweetCategories) std::cout << ", " << to_string(c) << " " << per_category[static_cast<int>(c)];
    std::cout << "\n";
    return 0;
}

int cmd_sample(Settings& s) {
    const auto in = s.required_path("io.tweets");
    Run run("sample", s, s.path("io.out"));
    run.input("io.tweets", in);
    const auto tweets = read_tweets(in);
    const auto months = s.list("sample.months");
    if (months.empty()) throw UsageError("--sample.months: at least one month is required");
    const auto seed = s.seed("sample.seed");
    const auto result = boost_sample(tweets, s.count("sample.quota"), months, seed);
    json report = json::array();
    for (const auto& m : result.months) {
        json available = json::object(), taken = json::object(), exhausted = json::array();
        for (auto c : kTweetCategories) {
            available[std::string(to_string(c))] = m.available[static_cast<int>(c)];
            taken[std::string(to_string(c))] = m.taken[static_cast<int>(c)];
        }
        for (auto c : m.exhausted()) exhausted.push_back(std::string(to_string(c)));
        report.push_back({{"month", m.month},
                          {"quota", m.quota},
                          {"drawn", m.drawn},
                          {"shortfall", m.quota - m.drawn},
                          {"available", available},
                          {"taken", taken},
                          {"exhausted", exhausted}});
        if (m.shortfall())
            std::cerr << "sample: month " << m.month << " short by " << (m.quota - m.drawn) << " (drew " << m.drawn
                      << " of " << m.quota << ")\n";
    }
    run.output("sampled.jsonl", jsonl_string(to_json_rows(result.tweets)));
    run.output("sample_report.json", json{{"months", report}}.dump(2) + "\n");
    run.set_seeds({seed});
    run.finish();
    std::cout << "sample: " << result.tweets.size() << " tweets over " << result.months.size() << " months\n";
    return 0;
}

int cmd_aggregate(Settings& s) {
    const auto in = s.required_path("io.annotations");
    Run run("aggregate", s, s.path("io.out"));
    run.input("io.annotations", in);
    const auto corpus = label_corpus(read_annotations(in));
    run.output("labeled.jsonl", jsonl_string(to_json_rows(corpus.examples)));
    run.output("stats.json", to_json(corpus.stats).dump(2) + "\n");
    run.finish();
    const auto& st = corpus.stats;
    std::cout << "aggregate: " << st.input_records << " records, " << st.retained_records << " retained, "
              << st.repaired_votes << " votes repaired\n";
    for (const auto& a : st.attributes) std::cout << "  kappa " << to_string(a.attribute) << ": " << kappa_text(a.kappa) << "\n";
    std::cout << "  kappa target (4 categories, full corpus): " << kappa_text(st.target_kappa_full) << "\n";
    return 0;
}

int cmd_train(Settings& s) {
    const auto setup = resolve_training(s);
    Run run("train", s, s.path("io.out"));
    const auto data = load_training_data(s, setup, run);
    const auto train_set = pick(data.samples, data.train_idx);
    const auto test_set = pick(data.samples, data.test_idx);

    json split = {{"train", json::array()}, {"test", json::array()}};
    for (const auto& x : train_set) split["train"].push_back(x.id);
    for (const auto& x : test_set) split["test"].push_back(x.id);
    run.output("split.json", split.dump() + "\n");

    const auto gold = gold_labels(test_set, setup.model);
    std::vector<TrainResult> results(setup.seeds.size());
    std::vector<MetricsReport> reports(setup.seeds.size());
    parallel_for(setup.seeds.size(), setup.jobs, [&](std::size_t i) {
        TrainConfig cfg = setup.cfg;
        cfg.seed = setup.seeds[i];
        const std::string dir = "seed-" + std::to_string(cfg.seed) + "/";
        auto result = train(train_set, cfg, setup.model);

        run.output(dir + "checkpoint.json", checkpoint_to_json({setup.model, result.params}).dump() + "\n");
        std::vector<json> history;
        for (const auto& r : result.history) history.push_back(to_json(r, setup.model));
        run.output(dir + "history.jsonl", jsonl_string(history));

        std::vector<json> rows;
        for (const auto& x : test_set) {
            PredictionRecord rec;
            rec.tweet_id = x.id;
            for (const auto& t : setup.model.tasks) rec.attributes.push_back(t.attribute);
            rec.predicted = predict(result.params, x.features, setup.model, &rec.probabilities);
            rows.push_back(to_json(rec));
        }
        run.output(dir + "predictions.jsonl", jsonl_string(rows));
        reports[i] = evaluate_predictions(gold, predict_all(result.params, test_set, setup.model));
        json metrics = to_json(reports[i]);
        metrics["seed"] = cfg.seed;
        metrics["diverged"] = result.diverged;
        if (result.diverged) metrics["diagnostic"] = result.diagnostic;
        run.output(dir + "metrics.json", metrics.dump(2) + "\n");
        results[i] = std::move(result);
    });
    run.set_seeds(setup.seeds);
    run.finish();

    int status = 0;
    std::cout << "train: " << train_set.size() << " train / " << test_set.size() << " test\n";
    for (std::size_t i = 0; i < results.size(); ++i) {
        const auto& h = results[i].history;
        std::cout << "  seed " << setup.seeds[i];
        if (!h.empty())
            std::cout << ": loss " << std::setprecision(5) << h.front().combined << " -> " << h.back().combined;
        for (const auto& t : reports[i].tasks)
            std::cout << ", " << to_string(t.attribute) << " F1 " << std::fixed << std::setprecision(4)
                      << t.metrics.macro.f1 << std::defaultfloat;
        std::cout << "\n";
        if (results[i].diverged) {
            std::cerr << "train: seed " << setup.seeds[i] << " diverged: " << results[i].diagnostic << "\n";
            status = static_cast<int>(ExitCode::Numeric);
        }
    }
    return status;
}

int cmd_tune(Settings& s) {
    const auto setup = resolve_training(s);
    TuneGrid grid;
    grid.learning_rates = s.real_list("tune.lr");
    for (double v : s.real_list("tune.batch_size")) grid.batch_sizes.push_back(static_cast<std::size_t>(v));
    for (double v : s.real_list("tune.epochs")) grid.epochs.push_back(static_cast<std::size_t>(v));
    grid.alphas = s.real_list("tune.alpha");
    grid.betas = s.real_list("tune.beta");
    grid.lambdas = s.real_list("tune.lambdas");
    grid.aggression_head_lrs = s.real_list("tune.head_lr.aggression");

    Run run("tune", s, s.path("io.out"));
    const auto data = load_training_data(s, setup, run);
    const auto train_set = pick(data.samples, data.train_idx);
    TrainConfig base = setup.cfg;
    base.seed = setup.seeds.front();
    const auto result = kfold_tune(train_set, base, grid, setup.split, setup.model, setup.jobs);

    json scores = json::array();
    for (const auto& g : result.scores) {
        json f1 = json::object();
        for (std::size_t t = 0; t < setup.model.tasks.size(); ++t)
            f1[std::string(to_string(setup.model.tasks[t].attribute))] = g.task_f1[t];
        scores.push_back({{"config", describe(g.config, setup.model)}, {"task_f1", f1}, {"score", g.score}});
    }
    run.output("tune.json", json{{"folds", setup.split.folds}, {"seed", base.seed}, {"best", result.best},
                                 {"scores", scores}}.dump(2) + "\n");
    std::string conf = "# best of " + std::to_string(result.scores.size()) + " grid points, mean CV macro F1 " +
                       fmt(result.best_score().score) + "\n";
    for (const auto& [k, v] : describe(result.best_score().config, setup.model)) conf += k + " = " + v + "\n";
    run.output("best.conf", conf);
    run.set_seeds({base.seed});
    run.finish();
    std::cout << "tune: " << result.scores.size() << " grid points, " << setup.split.folds << " folds; best #"
              << result.best << " score " << std::fixed << std::setprecision(4) << result.best_score().score << "\n"
              << "  " << (run.out() / "best.conf").string() << "\n";
    return 0;
}

int cmd_evaluate(Settings& s) {
    const auto preds_path = s.required_path("io.predictions");
    const auto labeled_path = s.required_path("io.labeled");
    Run run("evaluate", s, s.path("io.out"));
    run.input("io.predictions", preds_path);
    run.input("io.labeled", labeled_path);
    const auto preds = read_predictions(preds_path);
    const auto labeled = read_labeled(labeled_path);
    const auto gold = gold_for(preds, labeled, preds_path);
    const auto report = evaluate_predictions(gold, as_tasks(preds, preds_path));
    run.output("metrics.json", to_json(report).dump(2) + "\n");
    run.finish();
    std::cout << render_table(report);
    return 0;
}

int cmd_ensemble(Settings& s) {
    const auto files = s.list("io.predictions");
    if (files.empty()) throw UsageError("--io.predictions: at least one prediction file is required");
    const auto labeled_path = s.required_path("io.labeled");
    Run run("ensemble", s, s.path("io.out"));
    std::vector<fs::path> paths(files.begin(), files.end());
    std::vector<std::vector<PredictionRecord>> sets;
    for (const auto& p : paths) {
        run.input("io.predictions", p);
        sets.push_back(read_predictions(p));
        if (sets.back().empty()) throw DataError(p.string() + ": no predictions");
    }
    run.input("io.labeled", labeled_path);
    check_aligned(sets, paths);

    const auto& first = sets.front();
    const auto attrs = first.front().attributes;
    std::vector<PredictionRecord> merged(first.size());
    for (std::size_t i = 0; i < first.size(); ++i) {
        merged[i].tweet_id = first[i].tweet_id;
        merged[i].attributes = attrs;
        merged[i].predicted.assign(attrs.size(), 0);
    }
    std::size_t cascaded = 0, pairwise = 0;
    for (std::size_t t = 0; t < attrs.size(); ++t) {
        std::vector<std::vector<int>> votes(first.size());
        for (std::size_t i = 0; i < first.size(); ++i)
            for (const auto& set : sets) votes[i].push_back(set[i].predicted[t]);
        const auto outcome = ensemble_vote(attrs[t], votes);
        for (std::size_t i = 0; i < first.size(); ++i) merged[i].predicted[t] = outcome.winners[i];
        cascaded += outcome.cascaded_ties;
        pairwise += outcome.pairwise_ties;
    }
    auto report = evaluate_predictions(gold_for(merged, read_labeled(labeled_path), labeled_path),
                                       as_tasks(merged, labeled_path));
    report.cascaded_ties = cascaded;
    json metrics = to_json(report);
    metrics["members"] = files;
    metrics["pairwise_ties"] = pairwise;
    run.output("predictions.jsonl", jsonl_string(to_json_rows(merged)));
    run.output("metrics.json", metrics.dump(2) + "\n");
    run.finish();
    std::cout << "ensemble of " << sets.size() << " runs: " << pairwise << " pairwise ties, " << cascaded
              << " three-way ties (resolved by cascading the pairwise rule)\n"
              << render_table(report);
    return 0;
}

std::vector<fs::path> seed_prediction_files(const fs::path& run_dir) {
    std::vector<std::pair<std::uint64_t, fs::path>> found;
    if (!fs::is_directory(run_dir)) throw DataError("--io.run: '" + run_dir.string() + "' is not a directory");
    for (const auto& entry : fs::directory_iterator(run_dir)) {
        const auto name = entry.path().filename().string();
        if (!entry.is_directory() || !name.starts_with("seed-")) continue;
        const auto file = entry.path() / "predictions.jsonl";
        if (!fs::exists(file)) continue;
        try {
            found.emplace_back(std::stoull(name.substr(5)), file);
        } catch (const std::exception&) {
        }
    }
    if (found.empty()) throw DataError("--io.run: no seed-*/predictions.jsonl under '" + run_dir.string() + "'");
    std::sort(found.begin(), found.end());
    std::vector<fs::path> out;
    for (auto& f : found) out.push_back(f.second);
    return out;
}

int cmd_sweep(Settings& s) {
    std::vector<fs::path> paths;
    if (s.has("io.run")) {
        paths = seed_prediction_files(s.path("io.run"));
    } else {
        for (const auto& f : s.list("io.predictions")) paths.emplace_back(f);
    }
    if (paths.empty()) throw UsageError("sweep needs --io.run or --io.predictions");
    const auto labeled_path = s.required_path("io.labeled");
    Run run("sweep", s, s.path("io.out"));
    std::vector<std::vector<PredictionRecord>> sets;
    for (const auto& p : paths) {
        run.input("io.predictions", p);
        sets.push_back(read_predictions(p));
        if (sets.back().empty()) throw DataError(p.string() + ": no predictions");
    }
    run.input("io.labeled", labeled_path);
    check_aligned(sets, paths);
    std::vector<std::vector<TaskPredictions>> per_seed;
    for (std::size_t i = 0; i < sets.size(); ++i) per_seed.push_back(as_tasks(sets[i], paths[i]));
    const auto gold = gold_for(sets.front(), read_labeled(labeled_path), labeled_path);
    const auto csv = sweep_csv(seed_sweep(per_seed, gold));
    run.output("sweep.csv", csv);
    run.finish();
    std::cout << csv;
    return 0;
}

std::string render_stats(const json& stats) {
    std::ostringstream os;
    os << "corpus: " << stats.at("input_records").get<std::size_t>() << " records, "
       << stats.at("retained_records").get<std::size_t>() << " retained, "
       << stats.at("repaired_votes").get<std::size_t>() << " repaired votes, "
       << stats.at("annotators").get<std::size_t>() << " annotators\n";
    auto kappa = [](const json& k) {
        return kappa_text({k.at("kappa").get<double>(), k.at("degenerate").get<bool>()});
    };
    os << "target kappa, 4 categories on full corpus: " << kappa(stats.at("target_kappa_full")) << "\n";
    for (const auto& [name, a] : stats.at("attributes").items()) {
        os << "\n" << name << "  kappa " << kappa(a.at("kappa")) << "\n";
        os << "  " << std::left << std::setw(22) << "category" << std::right << std::setw(8) << "count"
           << std::setw(8) << "A" << std::setw(8) << "B" << std::setw(8) << "C" << "\n";
        const auto& tab = a.at("class_cross_tab");
        for (const auto& cat : task_schema(parse_attribute(name)).categories) {
            if (!tab.contains(cat)) continue;
            const auto& row = tab.at(cat);
            os << "  " << std::left << std::setw(22) << cat << std::right << std::setw(8)
               << a.at("adjusted_counts").value(cat, 0) << std::setw(8) << row.at("A").get<std::size_t>()
               << std::setw(8) << row.at("B").get<std::size_t>() << std::setw(8) << row.at("C").get<std::size_t>()
               << "\n";
        }
    }
    return os.str();
}

int cmd_report(Settings& s) {
    const auto metrics = s.list("io.metrics");
    if (metrics.empty() && !s.has("io.stats")) throw UsageError("report needs --io.metrics and/or --io.stats");
    std::optional<Run> run;
    if (s.has("io.out")) run.emplace("report", s, s.path("io.out"));
    std::string text;
    if (s.has("io.stats")) {
        const auto path = s.path("io.stats");
        if (run) run->input("io.stats", path);
        json stats;
        try {
            stats = json::parse(read_file(path));
            text += render_stats(stats);
        } catch (const json::exception& e) {
            throw DataError(path.string() + ": " + e.what());
        }
    }
    for (const auto& m : metrics) {
        if (run) run->input("io.metrics", m);
        json j;
        try {
            j = json::parse(read_file(m));
        } catch (const json::exception& e) {
            throw DataError(m + ": " + e.what());
        }
        if (!text.empty()) text += "\n";
        text += "== " + m + "\n" + render_table(metrics_report_from_json(j));
    }
    std::cout << text;
    if (run) {
        run->output("report.txt", text);
        run->finish();
    }
    return 0;
}

}  // namespace

std::vector<Command> all_commands() {
    std::vector<Command> out;
    out.push_back({"synth", "generate a synthetic annotated corpus",
                   keys(std::vector<KeySpec>{
                            {"synth.n", "1000", "number of tweets", {"n"}},
                            {"synth.eta", "0", "annotator noise rate", {"eta"}},
                            {"synth.seed", "1", "generator seed", {"seed"}},
                            {"synth.annotators", "3", "annotators per tweet", {}},
                            {"synth.signal_vocab", "6", "signal tokens per category", {}},
                            {"synth.signal_tokens", "3", "signal tokens per attribute per tweet", {}},
                            {"synth.filler_vocab", "300", "filler vocabulary size", {}},
                            {"synth.filler_tokens", "6", "filler tokens per tweet", {}},
                            {"synth.decoration_rate", "0.3", "probability of each decoration", {}},
                            out_key("synth-out")},
                        phrase_keys()),
                   cmd_synth});
    out.push_back({"preprocess", "categorize and normalize tweets",
                   keys(std::vector<KeySpec>{{"io.tweets", "", "tweets.jsonl", {"tweets"}}, out_key("preprocessed")},
                        text_keys()),
                   cmd_preprocess});
    out.push_back({"sample", "keyword-boosted monthly sampling",
                   keys(std::vector<KeySpec>{
                       {"io.tweets", "", "categorized tweets.jsonl", {"tweets"}},
                       {"sample.quota", "500", "tweets per month", {"quota"}},
                       {"sample.months", "2020-07,2020-08,2020-09,2020-10,2020-11,2020-12", "months to sample", {}},
                       {"sample.seed", "1", "sampling seed", {"seed"}},
                       out_key("sampled")}),
                   cmd_sample});
    out.push_back({"aggregate", "soft/silver labels, annotation classes and agreement",
                   keys(std::vector<KeySpec>{{"io.annotations", "", "annotations.jsonl", {"annotations"}},
                                             out_key("labeled")}),
                   cmd_aggregate});
    out.push_back({"train", "train one model per seed and predict the test split",
                   keys(std::vector<KeySpec>{{"io.tweets", "", "tweets.jsonl", {"tweets"}},
                                             {"io.labeled", "", "labeled.jsonl", {"labeled"}},
                                             out_key("run")},
                        train_keys(), text_keys()),
                   cmd_train});
    out.push_back({"tune", "k-fold grid search on the training split",
                   keys(std::vector<KeySpec>{
                            {"io.tweets", "", "tweets.jsonl", {"tweets"}},
                            {"io.labeled", "", "labeled.jsonl", {"labeled"}},
                            {"tune.lr", "", "candidate learning rates", {}},
                            {"tune.batch_size", "", "candidate batch sizes", {}},
                            {"tune.epochs", "", "candidate epoch counts", {}},
                            {"tune.alpha", "", "candidate alpha values", {}},
                            {"tune.beta", "", "candidate beta values", {}},
                            {"tune.lambdas", "", "candidate task weights, crossed over tasks", {}},
                            {"tune.head_lr.aggression", "", "candidate Aggression head learning rates", {}},
                            out_key("tune")},
                        train_keys(), text_keys()),
                   cmd_tune});
    out.push_back({"evaluate", "macro metrics of a prediction file",
                   keys(std::vector<KeySpec>{{"io.predictions", "", "predictions.jsonl", {"predictions"}},
                                             {"io.labeled", "", "labeled.jsonl with gold silver labels", {"labeled"}},
                                             out_key("eval")}),
                   cmd_evaluate});
    out.push_back({"ensemble", "majority vote over per-seed predictions",
                   keys(std::vector<KeySpec>{{"io.predictions", "", "comma-separated prediction files", {"predictions"}},
                                             {"io.labeled", "", "labeled.jsonl with gold silver labels", {"labeled"}},
                                             out_key("ensemble")}),
                   cmd_ensemble});
    out.push_back({"sweep", "ensemble metrics by number of seeds",
                   keys(std::vector<KeySpec>{
                       {"io.run", "", "train output directory (seed-*/predictions.jsonl)", {"run"}},
                       {"io.predictions", "", "comma-separated prediction files, in seed order", {"predictions"}},
                       {"io.labeled", "", "labeled.jsonl with gold silver labels", {"labeled"}},
                       out_key("sweep")}),
                   cmd_sweep});
    out.push_back({"report", "render metrics tables and corpus statistics",
                   keys(std::vector<KeySpec>{{"io.metrics", "", "comma-separated metrics.json files", {"metrics"}},
                                             {"io.stats", "", "stats.json from aggregate", {"stats"}},
                                             {"io.out", "", "also write report.txt here", {"out"}}}),
                   cmd_report});
    return out;
}

}  // namespace softlabel::cli
