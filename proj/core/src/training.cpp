#include "softlabel/training.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <mutex>
#include <numeric>
#include <thread>

#include "softlabel/error.hpp"

namespace softlabel {

void TrainConfig::validate() const {
    if (!(learning_rate >= 0.0)) throw UsageError("train: learning_rate must be >= 0");
    for (const auto& [a, lr] : head_learning_rates)
        if (!(lr >= 0.0)) throw UsageError("train: head learning rates must be >= 0");
    if (batch_size < 1) throw UsageError("train: batch_size must be >= 1");
    if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0))
        throw UsageError("train: optimizer betas must be in [0, 1)");
    if (!(epsilon > 0.0)) throw UsageError("train: epsilon must be > 0");
    if (!(weight_decay >= 0.0)) throw UsageError("train: weight_decay must be >= 0");
    if (loss.alpha < 0.0 || loss.beta < 0.0) throw UsageError("train: alpha and beta must be >= 0");
    for (const auto& [a, l] : task_lambdas)
        if (!(l >= 0.0)) throw UsageError("train: lambdas must be >= 0");
}

ModelConfig TrainConfig::model_config(const ModelConfig& base) const {
    ModelConfig m = base;
    m.tasks.clear();
    if (regime == Regime::Multitask) {
        for (auto a : kAttributes) m.tasks.push_back({a, task_schema(a).size()});
    } else {
        m.tasks.push_back({task, task_schema(task).size()});
    }
    return m;
}

TrainConfig TrainConfig::pretrained_single_task(Attribute task, LossKind kind) {
    TrainConfig c;
    c.regime = Regime::Single;
    c.task = task;
    c.learning_rate = 2e-5;
    c.batch_size = 20;
    c.loss.kind = kind;
    const int t = static_cast<int>(task);
    if (kind == LossKind::CE) {
        constexpr std::size_t epochs[] = {3, 5, 3};
        c.epochs = epochs[t];
    } else {
        constexpr std::size_t epochs[] = {3, 2, 2};
        constexpr double betas[] = {0.5, 0.2, 0.2};
        c.epochs = epochs[t];
        c.loss.alpha = 1.0;
        c.loss.beta = betas[t];
        c.loss.softmax_targets = true;
    }
    return c;
}

TrainConfig TrainConfig::pretrained_multitask(LossKind kind) {
    TrainConfig c;
    c.regime = Regime::Multitask;
    c.learning_rate = 2e-5;
    c.batch_size = 20;
    c.loss.kind = kind;
    if (kind == LossKind::CE) {
        c.epochs = 3;
    } else {
        c.epochs = 2;
        c.loss.alpha = 1.0;
        c.loss.beta = 0.2;
        c.task_lambdas = {{Attribute::Aggression, 0.2}, {Attribute::Target, 0.2}, {Attribute::Type, 1.0}};
        c.head_learning_rates[Attribute::Aggression] = 2.5e-5;
    }
    return c;
}

void SplitSpec::validate() const {
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw UsageError("split: train_fraction must be in (0, 1)");
    if (folds < 2) throw UsageError("split: folds must be >= 2");
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(std::size_t n, const SplitSpec& spec) {
    spec.validate();
    if (n < 2) throw DataError("split: need at least 2 examples");
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(spec.seed);
    rng.shuffle(std::span<std::size_t>(order));
    auto n_train = static_cast<std::size_t>(std::llround(static_cast<double>(n) * spec.train_fraction));
    n_train = std::clamp<std::size_t>(n_train, 1, n - 1);
    return {std::vector<std::size_t>(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train)),
            std::vector<std::size_t>(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end())};
}

std::vector<std::vector<std::size_t>> make_folds(std::size_t n, std::size_t k, std::uint64_t seed) {
    if (k < 2) throw UsageError("folds must be >= 2");
    if (n < k) throw DataError("cannot make " + std::to_string(k) + " non-empty folds from " + std::to_string(n) + " examples");
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng = Rng::derive(seed, 0xf01d);
    rng.shuffle(std::span<std::size_t>(order));
    std::vector<std::vector<std::size_t>> folds(k);
    std::size_t pos = 0;
    for (std::size_t f = 0; f < k; ++f) {
        const std::size_t size = n / k + (f < n % k ? 1 : 0);
        folds[f].assign(order.begin() + static_cast<std::ptrdiff_t>(pos),
                        order.begin() + static_cast<std::ptrdiff_t>(pos + size));
        pos += size;
    }
    return folds;
}

std::vector<Sample> build_samples(std::span<const LabeledExample> examples,
                                  const std::unordered_map<std::string, std::string>& texts,
                                  const ModelConfig& config) {
    std::vector<Sample> out;
    out.reserve(examples.size());
    for (const auto& ex : examples) {
        auto it = texts.find(ex.tweet_id);
        if (it == texts.end()) throw DataError("no tweet text for labeled example '" + ex.tweet_id + "'");
        Sample s;
        s.id = ex.tweet_id;
        s.features = encode(it->second, config.encoder_dim);
        for (const auto& task : config.tasks) {
            const auto& lbl = ex.of(task.attribute);
            if (lbl.soft.size() != task.num_categories)
                throw DataError("example '" + ex.tweet_id + "': " + std::string(to_string(task.attribute)) +
                                " soft label has " + std::to_string(lbl.soft.size()) + " entries");
            s.soft.push_back(lbl.soft);
            s.silver.push_back(lbl.silver);
        }
        out.push_back(std::move(s));
    }
    return out;
}

std::vector<std::vector<std::size_t>> silver_counts(std::span<const Sample> samples, const ModelConfig& config) {
    std::vector<std::vector<std::size_t>> counts;
    for (const auto& t : config.tasks) counts.emplace_back(t.num_categories, 0);
    for (const auto& s : samples)
        for (std::size_t t = 0; t < config.tasks.size(); ++t) ++counts[t].at(static_cast<std::size_t>(s.silver[t]));
    return counts;
}

LossConfig resolve_loss(std::span<const Sample> train_set, const TrainConfig& cfg, const ModelConfig& model) {
    LossConfig loss = cfg.loss;
    loss.task_lambdas.clear();
    for (const auto& t : model.tasks) {
        auto it = cfg.task_lambdas.find(t.attribute);
        loss.task_lambdas.push_back(it == cfg.task_lambdas.end() ? 1.0 : it->second);
    }
    loss.class_weights.clear();
    if (cfg.use_class_weights) {
        const auto counts = silver_counts(train_set, model);
        for (std::size_t t = 0; t < model.tasks.size(); ++t) {
            for (std::size_t c = 0; c < counts[t].size(); ++c)
                if (counts[t][c] == 0)
                    throw DataError("class weights undefined: task " + std::string(to_string(model.tasks[t].attribute)) +
                                    " has no training samples of category '" +
                                    task_schema(model.tasks[t].attribute).name(static_cast<int>(c)) + "'");
            loss.class_weights.push_back(class_weights(counts[t]));
        }
    }
    loss.validate(model.tasks.size());
    return loss;
}

TrainResult train(std::span<const Sample> train_set, const TrainConfig& cfg, const ModelConfig& model) {
    cfg.validate();
    model.validate();
    if (train_set.empty()) throw DataError("train: empty training set");

    TrainResult result;
    result.loss = resolve_loss(train_set, cfg, model);
    Rng init_rng = Rng::derive(cfg.seed, 0);
    result.params = ModelParams::initialize(model, init_rng);

    AdamWConfig opt;
    opt.learning_rate = cfg.learning_rate;
    opt.beta1 = cfg.beta1;
    opt.beta2 = cfg.beta2;
    opt.epsilon = cfg.epsilon;
    opt.weight_decay = cfg.weight_decay;
    for (std::size_t t = 0; t < model.tasks.size(); ++t) {
        auto it = cfg.head_learning_rates.find(model.tasks[t].attribute);
        if (it != cfg.head_learning_rates.end()) opt.head_learning_rates[static_cast<int>(t)] = it->second;
        if (result.loss.lambda(t) == 0.0) opt.frozen_heads.push_back(static_cast<int>(t));
    }
    OptimizerState state = OptimizerState::for_params(result.params);

    std::vector<std::size_t> order(train_set.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::vector<Sample> batch;
    std::uint64_t step = 0;
    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        Rng order_rng(cfg.seed + epoch);
        order_rng.shuffle(std::span<std::size_t>(order));

        EpochRecord rec;
        rec.epoch = epoch;
        rec.task_losses.assign(model.tasks.size(), 0.0);
        std::size_t batches = 0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
            batch.clear();
            for (std::size_t i = start; i < stop; ++i) batch.push_back(train_set[order[i]]);
            try {
                const auto g = backward(result.params, batch, result.loss, model, Mode::Train,
                                        Rng::derive(cfg.seed ^ 0xd50d5eedULL, step++));
                ModelParams next = result.params;
                OptimizerState next_state = state;
                adamw_step(next, g.grads, next_state, opt);
                if (!next.all_finite()) throw NumericError("parameters became non-finite");
                result.params = std::move(next);
                state = std::move(next_state);
                rec.combined += g.loss.total;
                for (std::size_t t = 0; t < rec.task_losses.size(); ++t) rec.task_losses[t] += g.loss.task_losses[t];
                ++batches;
            } catch (const NumericError& e) {
                result.diverged = true;
                result.diagnostic = "epoch " + std::to_string(epoch) + ", step " + std::to_string(step) + ": " + e.what();
                return result;
            }
        }
        if (batches > 0) {
            rec.combined /= static_cast<double>(batches);
            for (auto& l : rec.task_losses) l /= static_cast<double>(batches);
        }
        result.history.push_back(std::move(rec));
    }
    return result;
}

std::vector<TaskPredictions> predict_all(const ModelParams& params, std::span<const Sample> samples,
                                         const ModelConfig& model) {
    std::vector<TaskPredictions> out;
    for (const auto& t : model.tasks) out.push_back({t.attribute, {}});
    for (const auto& s : samples) {
        const auto pred = predict(params, s.features, model);
        for (std::size_t t = 0; t < out.size(); ++t) out[t].predicted.push_back(pred[t]);
    }
    return out;
}

std::vector<TaskPredictions> gold_labels(std::span<const Sample> samples, const ModelConfig& model) {
    std::vector<TaskPredictions> out;
    for (const auto& t : model.tasks) out.push_back({t.attribute, {}});
    for (const auto& s : samples)
        for (std::size_t t = 0; t < out.size(); ++t) out[t].predicted.push_back(s.silver[t]);
    return out;
}

nlohmann::json to_json(const EpochRecord& record, const ModelConfig& model) {
    nlohmann::json losses = nlohmann::json::object();
    for (std::size_t t = 0; t < model.tasks.size(); ++t)
        losses[std::string(to_string(model.tasks[t].attribute))] = record.task_losses[t];
    return {{"epoch", record.epoch}, {"task_losses", losses}, {"combined_loss", record.combined}};
}

std::vector<TrainConfig> TuneGrid::enumerate(const TrainConfig& base, const ModelConfig& model) const {
    auto or_base = [](const auto& values, auto fallback) {
        using T = typename std::decay_t<decltype(values)>::value_type;
        return values.empty() ? std::vector<T>{static_cast<T>(fallback)} : values;
    };
    const auto lrs = or_base(learning_rates, base.learning_rate);
    const auto bss = or_base(batch_sizes, base.batch_size);
    const auto eps = or_base(epochs, base.epochs);
    const auto as = or_base(alphas, base.loss.alpha);
    const auto bs = or_base(betas, base.loss.beta);

    // lambda tuples, first task outermost
    std::vector<std::map<Attribute, double>> lambda_sets;
    if (lambdas.empty()) {
        lambda_sets.push_back(base.task_lambdas);
    } else {
        lambda_sets.emplace_back();
        for (const auto& t : model.tasks) {
            std::vector<std::map<Attribute, double>> next;
            for (const auto& partial : lambda_sets)
                for (double l : lambdas) {
                    auto m = partial;
                    m[t.attribute] = l;
                    next.push_back(std::move(m));
                }
            lambda_sets = std::move(next);
        }
    }
    std::vector<std::map<Attribute, double>> head_sets;
    if (aggression_head_lrs.empty()) {
        head_sets.push_back(base.head_learning_rates);
    } else {
        for (double lr : aggression_head_lrs) {
            auto m = base.head_learning_rates;
            m[Attribute::Aggression] = lr;
            head_sets.push_back(std::move(m));
        }
    }

    std::vector<TrainConfig> out;
    for (double lr : lrs)
        for (auto bsz : bss)
            for (auto ep : eps)
                for (double a : as)
                    for (double b : bs)
                        for (const auto& ls : lambda_sets)
                            for (const auto& hs : head_sets) {
                                TrainConfig c = base;
                                c.learning_rate = lr;
                                c.batch_size = bsz;
                                c.epochs = ep;
                                c.loss.alpha = a;
                                c.loss.beta = b;
                                c.task_lambdas = ls;
                                c.head_learning_rates = hs;
                                out.push_back(std::move(c));
                            }
    return out;
}

void parallel_for(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)>& fn) {
    jobs = std::max<std::size_t>(1, std::min(jobs, n));
    if (jobs == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::mutex mu;
    std::size_t next = 0;
    std::exception_ptr error;
    auto worker = [&] {
        for (;;) {
            std::size_t i;
            {
                std::lock_guard lock(mu);
                if (next >= n || error) return;
                i = next++;
            }
            try {
                fn(i);
            } catch (...) {
                std::lock_guard lock(mu);
                if (!error) error = std::current_exception();
            }
        }
    };
    std::vector<std::jthread> threads;
    for (std::size_t j = 0; j < jobs; ++j) threads.emplace_back(worker);
    threads.clear();
    if (error) std::rethrow_exception(error);
}

TuneResult kfold_tune(std::span<const Sample> train_set, const TrainConfig& base, const TuneGrid& grid,
                      const SplitSpec& spec, const ModelConfig& model, std::size_t jobs) {
    spec.validate();
    const auto configs = grid.enumerate(base, model);
    if (configs.empty()) throw UsageError("tune: empty grid");
    const auto folds = make_folds(train_set.size(), spec.folds, spec.seed);
    for (const auto& f : folds)
        if (f.empty()) throw DataError("tune: empty fold");

    TuneResult result;
    result.scores.resize(configs.size());
    parallel_for(configs.size(), jobs, [&](std::size_t g) {
        GridScore& gs = result.scores[g];
        gs.config = configs[g];
        gs.task_f1.assign(model.tasks.size(), 0.0);
        for (std::size_t f = 0; f < folds.size(); ++f) {
            std::vector<Sample> fit, held;
            for (std::size_t o = 0; o < folds.size(); ++o)
                for (std::size_t i : folds[o]) (o == f ? held : fit).push_back(train_set[i]);
            const auto trained = train(fit, gs.config, model);
            const auto report = evaluate_predictions(gold_labels(held, model), predict_all(trained.params, held, model));
            for (std::size_t t = 0; t < model.tasks.size(); ++t) gs.task_f1[t] += report.tasks[t].metrics.macro.f1;
        }
        for (auto& v : gs.task_f1) v /= static_cast<double>(folds.size());
        if (base.regime == Regime::Single) {
            const int t = model.task_index(base.task);
            gs.score = gs.task_f1.at(static_cast<std::size_t>(t < 0 ? 0 : t));
        } else {
            gs.score = std::accumulate(gs.task_f1.begin(), gs.task_f1.end(), 0.0) /
                       static_cast<double>(gs.task_f1.size());
        }
    });
    for (std::size_t g = 1; g < result.scores.size(); ++g)
        if (result.scores[g].score > result.scores[result.best].score) result.best = g;
    return result;
}

}  // namespace softlabel
