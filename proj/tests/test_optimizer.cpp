#include <doctest.h>

#include <cmath>
#include <limits>

#include "softlabel/error.hpp"
#include "softlabel/optimizer.hpp"

using namespace softlabel;

namespace {

// Plain Adam (no decay) written from the update equations.
struct BruteAdam {
    double m = 0, v = 0;
    int t = 0;
    double step(double theta, double g, double lr, double b1, double b2, double eps) {
        ++t;
        m = b1 * m + (1 - b1) * g;
        v = b2 * v + (1 - b2) * g * g;
        const double mh = m / (1 - std::pow(b1, t));
        const double vh = v / (1 - std::pow(b2, t));
        return theta - lr * mh / (std::sqrt(vh) + eps);
    }
};

ModelConfig tiny() {
    ModelConfig c = ModelConfig::multitask();
    c.encoder_dim = 6;
    c.hidden_dim = 3;
    c.intermediate_dim = 4;
    return c;
}

}  // namespace

TEST_SUITE("optimizer") {

TEST_CASE("scalar examples") {
    AdamWConfig cfg;
    cfg.learning_rate = 0.1;
    cfg.weight_decay = 0.0;
    ScalarAdamW s;
    CHECK(s.update(1.0, 1.0, cfg) == doctest::Approx(0.9).epsilon(1e-7));

    ScalarAdamW z;
    CHECK(z.update(0.7, 0.0, cfg) == 0.7);

    cfg.weight_decay = 0.01;
    ScalarAdamW d;
    CHECK(d.update(2.0, 0.0, cfg) == doctest::Approx(2.0 * (1 - 0.001)).epsilon(1e-15));
}

TEST_CASE("zero decay equals plain Adam on random trajectories") {
    Rng rng(21);
    for (int trial = 0; trial < 50; ++trial) {
        AdamWConfig cfg;
        cfg.learning_rate = rng.uniform(1e-4, 0.5);
        cfg.beta1 = rng.uniform(0.5, 0.99);
        cfg.beta2 = rng.uniform(0.9, 0.9999);
        cfg.weight_decay = 0.0;
        ScalarAdamW ours;
        BruteAdam ref;
        double a = rng.uniform(-2, 2), b = a;
        for (int step = 0; step < 200; ++step) {
            const double g = rng.uniform(-3, 3);
            a = ours.update(a, g, cfg);
            b = ref.step(b, g, cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.epsilon);
        }
        CHECK(std::abs(a - b) < 1e-9 * std::max(1.0, std::abs(b)));
    }
}

TEST_CASE("tensor step matches the scalar rule element-wise") {
    const auto cfg = tiny();
    Rng rng(2);
    auto params = ModelParams::initialize(cfg, rng);
    auto grads = ModelParams::zeros(cfg);
    grads.for_each_tensor([&](std::string_view, int, Tensor& t) {
        for (auto& v : t.values) v = rng.uniform(-1, 1);
    });
    AdamWConfig opt;
    opt.learning_rate = 0.05;
    opt.head_learning_rates[2] = 0.01;

    const auto before = params;
    auto state = OptimizerState::for_params(params);
    adamw_step(params, grads, state, opt);
    CHECK(state.step == 1);

    std::vector<std::pair<int, const Tensor*>> old_t, grad_t, new_t;
    before.for_each_tensor([&](std::string_view, int h, const Tensor& t) { old_t.push_back({h, &t}); });
    grads.for_each_tensor([&](std::string_view, int h, const Tensor& t) { grad_t.push_back({h, &t}); });
    params.for_each_tensor([&](std::string_view, int h, const Tensor& t) { new_t.push_back({h, &t}); });
    for (std::size_t i = 0; i < old_t.size(); ++i) {
        AdamWConfig scalar = opt;
        scalar.learning_rate = opt.rate_for(old_t[i].first);
        for (std::size_t j = 0; j < old_t[i].second->values.size(); ++j) {
            ScalarAdamW s;
            CHECK(new_t[i].second->values[j] ==
                  s.update(old_t[i].second->values[j], grad_t[i].second->values[j], scalar));
        }
    }
}

TEST_CASE("frozen heads and zero gradients") {
    const auto cfg = tiny();
    Rng rng(5);
    auto params = ModelParams::initialize(cfg, rng);
    const auto before = params;
    auto grads = ModelParams::zeros(cfg);
    grads.for_each_tensor([&](std::string_view, int, Tensor& t) {
        for (auto& v : t.values) v = 0.3;
    });
    AdamWConfig opt;
    opt.frozen_heads = {0, 1};
    auto state = OptimizerState::for_params(params);
    for (int i = 0; i < 5; ++i) adamw_step(params, grads, state, opt);
    CHECK(params.heads[0] == before.heads[0]);
    CHECK(params.heads[1] == before.heads[1]);
    CHECK_FALSE(params.heads[2] == before.heads[2]);
    CHECK_FALSE(params.trunk_weight == before.trunk_weight);

    auto still = before;
    AdamWConfig nodecay;
    nodecay.weight_decay = 0.0;
    auto st = OptimizerState::for_params(still);
    adamw_step(still, ModelParams::zeros(cfg), st, nodecay);
    CHECK(still == before);
}

TEST_CASE("non-finite gradients are rejected") {
    const auto cfg = tiny();
    Rng rng(5);
    auto params = ModelParams::initialize(cfg, rng);
    auto grads = ModelParams::zeros(cfg);
    grads.trunk_bias.values[0] = std::numeric_limits<double>::infinity();
    auto state = OptimizerState::for_params(params);
    CHECK_THROWS_AS(adamw_step(params, grads, state, AdamWConfig{}), NumericError);
}

}  // TEST_SUITE
