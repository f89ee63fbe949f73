#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "softlabel/preprocess.hpp"

namespace softlabel {

struct MonthDraw {
    std::string month;
    std::size_t quota = 0;
    std::size_t drawn = 0;
    std::array<std::size_t, 4> available{};  // pool size per TweetCategory
    std::array<std::size_t, 4> taken{};      // draws per TweetCategory

    bool shortfall() const { return drawn < quota; }
    /// Categories whose pool was fully drawn, including empty pools.
    std::vector<TweetCategory> exhausted() const;
};

struct SampleResult {
    std::vector<Tweet> tweets;
    std::vector<MonthDraw> months;
};

/// Keyword-boosted sampling: per month, round-robin over the four categories
/// (anti-Asian, anti-Black, Interracial, Normal), drawing one tweet uniformly
/// without replacement from each non-empty pool until the quota is met.
SampleResult boost_sample(std::span<const Tweet> candidates, std::size_t per_month_quota,
                          std::span<const std::string> months, std::uint64_t seed);

}  // namespace softlabel
