#include <doctest.h>

#include <map>
#include <numeric>

#include "softlabel/evaluation.hpp"
#include "softlabel/rng.hpp"

using namespace softlabel;

namespace {

// Tie table listed pair by pair.
int table_winner(Attribute a, int x, int y) {
    static const std::map<std::pair<int, int>, int> three = {{{0, 1}, 0}, {{1, 2}, 1}, {{0, 2}, 0}};
    static const std::map<std::pair<int, int>, int> two = {{{0, 1}, 0}};
    const auto key = std::make_pair(std::min(x, y), std::max(x, y));
    return (a == Attribute::Target ? two : three).at(key);
}

int oracle_vote(Attribute a, const std::vector<int>& votes, std::size_t categories) {
    std::vector<int> count(categories, 0);
    for (int v : votes) ++count[static_cast<std::size_t>(v)];
    const int best = *std::max_element(count.begin(), count.end());
    std::vector<int> leaders;
    for (std::size_t c = 0; c < categories; ++c)
        if (count[c] == best) leaders.push_back(static_cast<int>(c));
    if (leaders.size() == 1) return leaders[0];
    if (leaders.size() == 2) return table_winner(a, leaders[0], leaders[1]);
    return table_winner(a, table_winner(a, leaders[0], leaders[1]), leaders[2]);
}

}  // namespace

TEST_SUITE("evaluation") {

TEST_CASE("macro metrics on the two-class example") {
    const auto m = macro_prf(ConfusionMatrix::from_rows({{2, 0}, {1, 1}}));
    CHECK(std::abs(m.macro.precision - 0.8333) < 1e-4);
    CHECK(std::abs(m.macro.recall - 0.75) < 1e-4);
    CHECK(std::abs(m.macro.f1 - 0.7333) < 1e-4);
    CHECK(m.per_category[0].precision == doctest::Approx(2.0 / 3.0));
    CHECK(m.per_category[1].recall == doctest::Approx(0.5));
}

TEST_CASE("diagonal matrices score one") {
    const auto m = macro_prf(ConfusionMatrix::from_rows({{5, 0, 0}, {0, 2, 0}, {0, 0, 9}}));
    CHECK(m.macro.precision == 1.0);
    CHECK(m.macro.recall == 1.0);
    CHECK(m.macro.f1 == 1.0);
}

TEST_CASE("absent category counts as zero") {
    const auto m = macro_prf(ConfusionMatrix::from_rows({{3, 0, 0}, {0, 3, 0}, {0, 0, 0}}));
    CHECK(m.per_category[2].precision == 0.0);
    CHECK(m.per_category[2].recall == 0.0);
    CHECK(m.per_category[2].f1 == 0.0);
    CHECK(m.macro.f1 == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("macro metrics are invariant under category relabeling") {
    Rng rng(17);
    for (int trial = 0; trial < 300; ++trial) {
        const std::size_t k = 2 + rng.uniform_index(3);
        std::vector<std::vector<std::size_t>> rows(k, std::vector<std::size_t>(k));
        for (auto& r : rows)
            for (auto& v : r) v = rng.uniform_index(10);
        std::vector<std::size_t> perm(k);
        std::iota(perm.begin(), perm.end(), std::size_t{0});
        rng.shuffle(std::span<std::size_t>(perm));
        auto permuted = rows;
        for (std::size_t i = 0; i < k; ++i)
            for (std::size_t j = 0; j < k; ++j) permuted[perm[i]][perm[j]] = rows[i][j];
        const auto a = macro_prf(ConfusionMatrix::from_rows(rows));
        const auto b = macro_prf(ConfusionMatrix::from_rows(permuted));
        CHECK(std::abs(a.macro.f1 - b.macro.f1) < 1e-12);
        CHECK(std::abs(a.macro.precision - b.macro.precision) < 1e-12);
        for (std::size_t c = 0; c < k; ++c) {
            CHECK(a.per_category[c].f1 == b.per_category[perm[c]].f1);
            CHECK(a.macro.f1 >= 0.0);
            CHECK(a.macro.f1 <= 1.0);
        }
    }
}

TEST_CASE("tie table") {
    CHECK(pairwise_tie_winner(Attribute::Aggression, 0, 1) == 0);
    CHECK(pairwise_tie_winner(Attribute::Aggression, 2, 1) == 1);
    CHECK(pairwise_tie_winner(Attribute::Aggression, 0, 2) == 0);
    CHECK(pairwise_tie_winner(Attribute::Target, 1, 0) == 0);
    CHECK(pairwise_tie_winner(Attribute::Type, 0, 1) == 0);
    CHECK(pairwise_tie_winner(Attribute::Type, 1, 2) == 1);
    CHECK(pairwise_tie_winner(Attribute::Type, 2, 0) == 0);
}

TEST_CASE("ensemble examples") {
    CHECK(ensemble_vote_one(Attribute::Type, std::vector<int>{0, 1}) == 0);
    CHECK(ensemble_vote_one(Attribute::Aggression, std::vector<int>{1, 1, 2, 2, 0}) == 1);
    CHECK(ensemble_vote_one(Attribute::Type, std::vector<int>{2, 2, 2}) == 2);
    int leaders = 0;
    CHECK(ensemble_vote_one(Attribute::Type, std::vector<int>{2, 1, 0}, &leaders) == 0);
    CHECK(leaders == 3);
}

TEST_CASE("all five-seed profiles match the tie oracle") {
    for (auto a : {Attribute::Aggression, Attribute::Type}) {
        std::vector<std::vector<int>> profiles;
        for (int code = 0; code < 243; ++code) {
            std::vector<int> votes;
            for (int s = 0, c = code; s < 5; ++s, c /= 3) votes.push_back(c % 3);
            profiles.push_back(votes);
        }
        const auto outcome = ensemble_vote(a, profiles);
        REQUIRE(outcome.winners.size() == 243);
        for (std::size_t i = 0; i < profiles.size(); ++i) CHECK(outcome.winners[i] == oracle_vote(a, profiles[i], 3));
    }
    for (int code = 0; code < 32; ++code) {
        std::vector<int> votes;
        for (int s = 0; s < 5; ++s) votes.push_back((code >> s) & 1);
        CHECK(ensemble_vote_one(Attribute::Target, votes) == oracle_vote(Attribute::Target, votes, 2));
    }
}

TEST_CASE("ensemble ties are counted and order does not matter without ties") {
    const std::vector<std::vector<int>> votes = {{0, 0, 0, 1, 1, 1}, {0, 0, 1, 1, 2, 2}, {2, 2, 2, 2, 1, 1}};
    const auto out = ensemble_vote(Attribute::Type, votes);
    CHECK(out.pairwise_ties == 1);
    CHECK(out.cascaded_ties == 1);

    Rng rng(4);
    for (int i = 0; i < 500; ++i) {
        std::vector<int> seeds(1 + rng.uniform_index(7));
        for (auto& v : seeds) v = static_cast<int>(rng.uniform_index(3));
        int leaders = 0;
        const int base = ensemble_vote_one(Attribute::Type, seeds, &leaders);
        rng.shuffle(std::span<int>(seeds));
        CHECK(ensemble_vote_one(Attribute::Type, seeds) == base);
    }
}

TEST_CASE("contradiction count") {
    const std::vector<int> agg = {0, 0, 2}, tgt = {0, 1, 1}, typ = {0, 0, 2};
    CHECK(contradiction_count(agg, tgt, typ) == 1);

    Rng rng(99);
    std::vector<int> a(10000), t(10000), y(10000);
    std::size_t brute = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        a[i] = static_cast<int>(rng.uniform_index(3));
        t[i] = static_cast<int>(rng.uniform_index(2));
        y[i] = static_cast<int>(rng.uniform_index(3));
        if (a[i] == 0 && (t[i] != 0 || y[i] != 0)) ++brute;
    }
    CHECK(contradiction_count(a, t, y) == brute);
}

TEST_CASE("evaluate_predictions and report serialization") {
    const std::vector<TaskPredictions> gold = {
        {Attribute::Aggression, {0, 1, 2, 0}}, {Attribute::Target, {0, 1, 1, 0}}, {Attribute::Type, {0, 1, 2, 0}}};
    const std::vector<TaskPredictions> pred = {
        {Attribute::Aggression, {0, 1, 2, 0}}, {Attribute::Target, {1, 1, 1, 0}}, {Attribute::Type, {0, 2, 2, 0}}};
    const auto report = evaluate_predictions(gold, pred);
    CHECK(report.samples == 4);
    REQUIRE(report.tasks.size() == 3);
    CHECK(report.tasks[0].metrics.macro.f1 == 1.0);
    REQUIRE(report.contradictions.has_value());
    CHECK(*report.contradictions == 1);

    const auto back = metrics_report_from_json(to_json(report));
    CHECK(to_json(back) == to_json(report));
    const auto table = render_table(report);
    CHECK(table.find("aggression") != std::string::npos);
    CHECK(table.find("macro") != std::string::npos);
}

TEST_CASE("seed sweep") {
    const std::vector<TaskPredictions> gold = {{Attribute::Type, {0, 1, 2, 1, 0}}};
    const std::vector<std::vector<TaskPredictions>> same(4, gold);
    const auto constant = seed_sweep(same, gold);
    REQUIRE(constant.size() == 4);
    for (const auto& row : constant) CHECK(row.macro.f1 == 1.0);

    const std::vector<std::vector<TaskPredictions>> seeds = {
        {{Attribute::Type, {0, 1, 2, 1, 0}}}, {{Attribute::Type, {0, 1, 1, 1, 0}}}, {{Attribute::Type, {0, 2, 1, 1, 0}}}};
    const auto rows = seed_sweep(seeds, gold);
    REQUIRE(rows.size() == 3);
    const auto k1 = evaluate_predictions(gold, seeds[0]);
    CHECK(rows[0].macro.f1 == k1.tasks[0].metrics.macro.f1);

    // k=3: per tweet majority of the three prediction sets by hand
    std::vector<int> majority;
    for (std::size_t i = 0; i < 5; ++i) {
        std::vector<int> v = {seeds[0][0].predicted[i], seeds[1][0].predicted[i], seeds[2][0].predicted[i]};
        majority.push_back(oracle_vote(Attribute::Type, v, 3));
    }
    const std::vector<TaskPredictions> maj = {{Attribute::Type, majority}};
    CHECK(rows[2].macro.f1 == evaluate_predictions(gold, maj).tasks[0].metrics.macro.f1);

    const auto csv = sweep_csv(rows);
    CHECK(csv.rfind("k,task,precision,recall,f1\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);
}

}  // TEST_SUITE
