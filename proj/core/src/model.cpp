#include "softlabel/model.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "softlabel/error.hpp"

namespace softlabel {

namespace {

std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

void glorot(Tensor& t, Rng& rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(t.rows + t.cols));
    for (auto& v : t.values) v = rng.uniform(-limit, limit);
}

struct Activations {
    std::vector<double> hidden;        // h
    std::vector<double> pre;           // a = h W + b
    std::vector<double> mask;          // dropout scale per unit (0 or 1/(1-p)); empty in eval
    std::vector<double> trunk;         // z
    std::vector<std::vector<double>> probs;
};

Activations run_forward(const ModelParams& params, const Features& x, const ModelConfig& cfg, Mode mode,
                        Rng& rng) {
    if (x.dim != cfg.encoder_dim)
        throw DataError("forward: feature dimension " + std::to_string(x.dim) + " != encoder_dim " +
                        std::to_string(cfg.encoder_dim));
    Activations act;
    const std::size_t H = cfg.hidden_dim, I = cfg.intermediate_dim;
    act.hidden.assign(params.encoder_bias.values.begin(), params.encoder_bias.values.end());
    for (std::size_t n = 0; n < x.indices.size(); ++n) {
        const double v = x.values[n];
        const double* row = &params.encoder_weight.values[x.indices[n] * H];
        for (std::size_t k = 0; k < H; ++k) act.hidden[k] += v * row[k];
    }

    act.pre.assign(params.trunk_bias.values.begin(), params.trunk_bias.values.end());
    for (std::size_t k = 0; k < H; ++k) {
        const double hk = act.hidden[k];
        if (hk == 0.0) continue;
        const double* row = &params.trunk_weight.values[k * I];
        for (std::size_t j = 0; j < I; ++j) act.pre[j] += hk * row[j];
    }

    act.trunk.resize(I);
    if (mode == Mode::Train && cfg.dropout_p > 0.0) {
        act.mask.resize(I);
        const double keep_scale = 1.0 / (1.0 - cfg.dropout_p);
        for (std::size_t j = 0; j < I; ++j) act.mask[j] = rng.uniform01() < cfg.dropout_p ? 0.0 : keep_scale;
    }
    for (std::size_t j = 0; j < I; ++j) {
        const double a = act.pre[j];
        double z = a > 0.0 ? a : cfg.leaky_relu_slope * a;
        if (!act.mask.empty()) z *= act.mask[j];
        act.trunk[j] = z;
    }

    act.probs.reserve(cfg.tasks.size());
    for (std::size_t t = 0; t < cfg.tasks.size(); ++t) {
        const auto& head = params.heads[t];
        const std::size_t C = head.bias.cols;
        std::vector<double> logits(head.bias.values.begin(), head.bias.values.end());
        for (std::size_t j = 0; j < I; ++j) {
            const double zj = act.trunk[j];
            if (zj == 0.0) continue;
            for (std::size_t c = 0; c < C; ++c) logits[c] += zj * head.weight(j, c);
        }
        act.probs.push_back(softmax(logits));
    }
    return act;
}

void check_batch(std::span<const Sample> batch, const ModelConfig& cfg) {
    if (batch.empty()) throw DataError("empty batch");
    for (const auto& s : batch)
        if (s.silver.size() != cfg.tasks.size() || s.soft.size() != cfg.tasks.size())
            throw DataError("sample " + s.id + ": targets do not match the model's tasks");
}

}  // namespace

void ModelConfig::validate() const {
    if (encoder_dim < 1 || hidden_dim < 1 || intermediate_dim < 1)
        throw UsageError("model: all dimensions must be >= 1");
    if (!(dropout_p >= 0.0 && dropout_p < 1.0)) throw UsageError("model: dropout_p must be in [0, 1)");
    if (tasks.empty()) throw UsageError("model: at least one task required");
    for (const auto& t : tasks)
        if (t.num_categories < 2 || t.num_categories > 3)
            throw UsageError("model: task category counts must be 2 or 3");
}

int ModelConfig::task_index(Attribute a) const {
    for (std::size_t i = 0; i < tasks.size(); ++i)
        if (tasks[i].attribute == a) return static_cast<int>(i);
    return -1;
}

ModelConfig ModelConfig::multitask() {
    ModelConfig cfg;
    for (auto a : kAttributes) cfg.tasks.push_back({a, task_schema(a).size()});
    return cfg;
}

ModelConfig ModelConfig::single(Attribute a) {
    ModelConfig cfg;
    cfg.tasks.push_back({a, task_schema(a).size()});
    return cfg;
}

ModelParams ModelParams::zeros(const ModelConfig& cfg) {
    ModelParams p;
    p.encoder_weight = Tensor(cfg.encoder_dim, cfg.hidden_dim);
    p.encoder_bias = Tensor(1, cfg.hidden_dim);
    p.trunk_weight = Tensor(cfg.hidden_dim, cfg.intermediate_dim);
    p.trunk_bias = Tensor(1, cfg.intermediate_dim);
    for (const auto& t : cfg.tasks)
        p.heads.push_back({Tensor(cfg.intermediate_dim, t.num_categories), Tensor(1, t.num_categories)});
    return p;
}

ModelParams ModelParams::initialize(const ModelConfig& cfg, Rng& rng) {
    cfg.validate();
    ModelParams p = zeros(cfg);
    glorot(p.encoder_weight, rng);
    glorot(p.trunk_weight, rng);
    for (auto& h : p.heads) glorot(h.weight, rng);
    return p;
}

void ModelParams::for_each_tensor(const std::function<void(std::string_view, int, Tensor&)>& fn) {
    fn("encoder.weight", -1, encoder_weight);
    fn("encoder.bias", -1, encoder_bias);
    fn("trunk.weight", -1, trunk_weight);
    fn("trunk.bias", -1, trunk_bias);
    for (std::size_t t = 0; t < heads.size(); ++t) {
        fn("head.weight", static_cast<int>(t), heads[t].weight);
        fn("head.bias", static_cast<int>(t), heads[t].bias);
    }
}

void ModelParams::for_each_tensor(
    const std::function<void(std::string_view, int, const Tensor&)>& fn) const {
    const_cast<ModelParams*>(this)->for_each_tensor(
        [&](std::string_view name, int head, Tensor& t) { fn(name, head, t); });
}

std::size_t ModelParams::parameter_count() const {
    std::size_t n = 0;
    for_each_tensor([&](std::string_view, int, const Tensor& t) { n += t.size(); });
    return n;
}

bool ModelParams::all_finite() const {
    bool ok = true;
    for_each_tensor([&](std::string_view, int, const Tensor& t) {
        for (double v : t.values) ok = ok && std::isfinite(v);
    });
    return ok;
}

std::vector<double> Features::dense() const {
    std::vector<double> out(dim, 0.0);
    for (std::size_t n = 0; n < indices.size(); ++n) out[indices[n]] = values[n];
    return out;
}

double Features::norm() const {
    double s = 0.0;
    for (double v : values) s += v * v;
    return std::sqrt(s);
}

Features encode(std::string_view text, std::size_t encoder_dim) {
    if (encoder_dim == 0) throw UsageError("encode: encoder_dim must be >= 1");
    std::map<std::uint32_t, double> buckets;
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && text[i] == ' ') ++i;
        std::size_t j = i;
        while (j < text.size() && text[j] != ' ') ++j;
        if (j > i) {
            const std::uint64_t h = fnv1a(text.substr(i, j - i));
            const auto bucket = static_cast<std::uint32_t>((h & 0x7fffffffffffffffULL) % encoder_dim);
            buckets[bucket] += (h >> 63) ? -1.0 : 1.0;
        }
        i = j;
    }
    Features f;
    f.dim = encoder_dim;
    double sq = 0.0;
    for (const auto& [idx, v] : buckets) {
        if (v == 0.0) continue;
        f.indices.push_back(idx);
        f.values.push_back(v);
        sq += v * v;
    }
    if (sq > 0.0) {
        const double inv = 1.0 / std::sqrt(sq);
        for (auto& v : f.values) v *= inv;
    }
    return f;
}

Features from_dense(std::span<const double> dense) {
    Features f;
    f.dim = dense.size();
    for (std::size_t i = 0; i < dense.size(); ++i)
        if (dense[i] != 0.0) {
            f.indices.push_back(static_cast<std::uint32_t>(i));
            f.values.push_back(dense[i]);
        }
    return f;
}

std::vector<std::vector<double>> forward(const ModelParams& params, const Features& features,
                                         const ModelConfig& config, Mode mode, Rng& rng) {
    return run_forward(params, features, config, mode, rng).probs;
}

std::vector<int> predict(const ModelParams& params, const Features& features, const ModelConfig& config,
                         std::vector<std::vector<double>>* probabilities) {
    Rng unused(0);
    auto probs = forward(params, features, config, Mode::Eval, unused);
    std::vector<int> out;
    out.reserve(probs.size());
    for (const auto& p : probs)
        out.push_back(static_cast<int>(std::max_element(p.begin(), p.end()) - p.begin()));
    if (probabilities != nullptr) *probabilities = std::move(probs);
    return out;
}

BatchLoss batch_loss(const ModelParams& params, std::span<const Sample> batch, const LossConfig& loss,
                     const ModelConfig& config, Mode mode, Rng rng) {
    check_batch(batch, config);
    const std::size_t T = config.tasks.size();
    BatchLoss out;
    out.task_losses.assign(T, 0.0);
    for (const auto& s : batch) {
        const auto probs = forward(params, s.features, config, mode, rng);
        for (std::size_t t = 0; t < T; ++t)
            out.task_losses[t] += sample_loss(probs[t], s.soft[t], s.silver[t], loss, loss.weight(t, s.silver[t]));
    }
    const double n = static_cast<double>(batch.size());
    std::vector<double> lambdas(T);
    for (std::size_t t = 0; t < T; ++t) {
        out.task_losses[t] /= n;
        lambdas[t] = loss.lambda(t);
    }
    out.total = loss_multitask(out.task_losses, lambdas);
    return out;
}

Gradients backward(const ModelParams& params, std::span<const Sample> batch, const LossConfig& loss,
                   const ModelConfig& config, Mode mode, Rng rng) {
    check_batch(batch, config);
    const std::size_t T = config.tasks.size();
    const std::size_t H = config.hidden_dim, I = config.intermediate_dim;
    const double n = static_cast<double>(batch.size());

    Gradients out{ModelParams::zeros(config), {}};
    auto& g = out.grads;
    out.loss.task_losses.assign(T, 0.0);

    std::vector<double> d_trunk(I), d_pre(I), d_hidden(H), d_logits;
    for (const auto& s : batch) {
        const Activations act = run_forward(params, s.features, config, mode, rng);
        std::fill(d_trunk.begin(), d_trunk.end(), 0.0);

        for (std::size_t t = 0; t < T; ++t) {
            const auto& p = act.probs[t];
            const double w = loss.weight(t, s.silver[t]);
            const double lambda = loss.lambda(t);
            if (lambda == 0.0) {
                out.loss.task_losses[t] += sample_loss(p, s.soft[t], s.silver[t], loss, w);
                continue;
            }
            d_logits.assign(p.size(), 0.0);
            out.loss.task_losses[t] += sample_loss_grad(p, s.soft[t], s.silver[t], loss, w, d_logits);
            const double scale = lambda / n;
            for (auto& d : d_logits) d *= scale;

            auto& head = g.heads[t];
            const auto& W = params.heads[t].weight;
            const std::size_t C = p.size();
            for (std::size_t c = 0; c < C; ++c) head.bias.values[c] += d_logits[c];
            for (std::size_t j = 0; j < I; ++j) {
                const double zj = act.trunk[j];
                double acc = 0.0;
                for (std::size_t c = 0; c < C; ++c) {
                    head.weight(j, c) += zj * d_logits[c];
                    acc += W(j, c) * d_logits[c];
                }
                d_trunk[j] += acc;
            }
        }

        for (std::size_t j = 0; j < I; ++j) {
            const double slope = act.pre[j] > 0.0 ? 1.0 : config.leaky_relu_slope;
            const double m = act.mask.empty() ? 1.0 : act.mask[j];
            d_pre[j] = d_trunk[j] * m * slope;
            g.trunk_bias.values[j] += d_pre[j];
        }

        for (std::size_t k = 0; k < H; ++k) {
            const double hk = act.hidden[k];
            const double* wrow = &params.trunk_weight.values[k * I];
            double* grow = &g.trunk_weight.values[k * I];
            double acc = 0.0;
            for (std::size_t j = 0; j < I; ++j) {
                grow[j] += hk * d_pre[j];
                acc += wrow[j] * d_pre[j];
            }
            d_hidden[k] = acc;
            g.encoder_bias.values[k] += acc;
        }

        for (std::size_t q = 0; q < s.features.indices.size(); ++q) {
            const double v = s.features.values[q];
            double* grow = &g.encoder_weight.values[s.features.indices[q] * H];
            for (std::size_t k = 0; k < H; ++k) grow[k] += v * d_hidden[k];
        }
    }

    std::vector<double> lambdas(T);
    for (std::size_t t = 0; t < T; ++t) {
        out.loss.task_losses[t] /= n;
        lambdas[t] = loss.lambda(t);
    }
    out.loss.total = loss_multitask(out.loss.task_losses, lambdas);
    if (!std::isfinite(out.loss.total))
        throw NumericError("backward: non-finite loss " + std::to_string(out.loss.total));
    return out;
}

}  // namespace softlabel
