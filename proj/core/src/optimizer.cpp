#include "softlabel/optimizer.hpp"

#include <algorithm>
#include <cmath>

#include "softlabel/error.hpp"

namespace softlabel {

double AdamWConfig::rate_for(int head) const {
    auto it = head_learning_rates.find(head);
    return it == head_learning_rates.end() ? learning_rate : it->second;
}

bool AdamWConfig::is_frozen(int head) const {
    return head >= 0 && std::find(frozen_heads.begin(), frozen_heads.end(), head) != frozen_heads.end();
}

OptimizerState OptimizerState::for_params(const ModelParams& params) {
    OptimizerState s;
    params.for_each_tensor([&](std::string_view, int, const Tensor& t) {
        s.first_moment.emplace_back(t.size(), 0.0);
        s.second_moment.emplace_back(t.size(), 0.0);
    });
    return s;
}

void adamw_step(ModelParams& params, const ModelParams& grads, OptimizerState& state, const AdamWConfig& cfg) {
    std::vector<const Tensor*> g;
    grads.for_each_tensor([&](std::string_view, int, const Tensor& t) { g.push_back(&t); });
    if (state.first_moment.empty()) state = OptimizerState::for_params(params);
    if (g.size() != state.first_moment.size()) throw DataError("adamw_step: gradient/state tensor count mismatch");
    for (const auto* t : g)
        for (double v : t->values)
            if (!std::isfinite(v)) throw NumericError("adamw_step: non-finite gradient");

    ++state.step;
    const double t = static_cast<double>(state.step);
    const double bc1 = 1.0 - std::pow(cfg.beta1, t);
    const double bc2 = 1.0 - std::pow(cfg.beta2, t);

    std::size_t idx = 0;
    params.for_each_tensor([&](std::string_view name, int head, Tensor& p) {
        const Tensor& grad = *g[idx];
        auto& m = state.first_moment[idx];
        auto& v = state.second_moment[idx];
        ++idx;
        if (grad.size() != p.size() || m.size() != p.size())
            throw DataError("adamw_step: shape mismatch for " + std::string(name));
        if (cfg.is_frozen(head)) return;
        const double lr = cfg.rate_for(head);
        const double decay = 1.0 - lr * cfg.weight_decay;
        for (std::size_t i = 0; i < p.size(); ++i) {
            const double gi = grad.values[i];
            m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * gi;
            v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * gi * gi;
            const double m_hat = m[i] / bc1;
            const double v_hat = v[i] / bc2;
            p.values[i] = p.values[i] * decay - lr * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
        }
    });
}

double ScalarAdamW::update(double theta, double grad, const AdamWConfig& cfg) {
    ++step;
    const double t = static_cast<double>(step);
    m = cfg.beta1 * m + (1.0 - cfg.beta1) * grad;
    v = cfg.beta2 * v + (1.0 - cfg.beta2) * grad * grad;
    const double m_hat = m / (1.0 - std::pow(cfg.beta1, t));
    const double v_hat = v / (1.0 - std::pow(cfg.beta2, t));
    return theta * (1.0 - cfg.learning_rate * cfg.weight_decay) -
           cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
}

}  // namespace softlabel
