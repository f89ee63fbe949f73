#include "softlabel/sampling.hpp"

#include "softlabel/error.hpp"
#include "softlabel/rng.hpp"

namespace softlabel {

std::vector<TweetCategory> MonthDraw::exhausted() const {
    std::vector<TweetCategory> out;
    for (auto c : kTweetCategories)
        if (taken[static_cast<int>(c)] == available[static_cast<int>(c)]) out.push_back(c);
    return out;
}

SampleResult boost_sample(std::span<const Tweet> candidates, std::size_t per_month_quota,
                          std::span<const std::string> months, std::uint64_t seed) {
    if (per_month_quota == 0) throw UsageError("boost_sample: quota must be positive");
    Rng rng(seed);
    SampleResult result;
    for (const auto& month : months) {
        std::array<std::vector<std::size_t>, 4> pools;
        for (std::size_t i = 0; i < candidates.size(); ++i)
            if (candidates[i].month == month)
                pools[static_cast<int>(candidates[i].category)].push_back(i);

        MonthDraw draw;
        draw.month = month;
        draw.quota = per_month_quota;
        for (int c = 0; c < 4; ++c) draw.available[c] = pools[c].size();

        bool any_left = true;
        while (draw.drawn < per_month_quota && any_left) {
            any_left = false;
            for (int c = 0; c < 4 && draw.drawn < per_month_quota; ++c) {
                auto& pool = pools[c];
                if (pool.empty()) continue;
                const std::size_t k = rng.uniform_index(pool.size());
                result.tweets.push_back(candidates[pool[k]]);
                pool[k] = pool.back();
                pool.pop_back();
                ++draw.taken[c];
                ++draw.drawn;
                any_left = any_left || !pool.empty();
            }
        }
        result.months.push_back(std::move(draw));
    }
    return result;
}

}  // namespace softlabel
