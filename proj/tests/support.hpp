#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "softlabel/rng.hpp"
#include "softlabel/segmenter.hpp"

namespace testing {

inline const softlabel::Lexicon& bundled_lexicon() {
    static const softlabel::Lexicon lex = softlabel::Lexicon::load(SOFTLABEL_LEXICON);
    return lex;
}

inline std::vector<double> random_distribution(softlabel::Rng& rng, std::size_t k) {
    std::vector<double> p(k);
    double sum = 0.0;
    for (auto& v : p) {
        v = rng.uniform(0.01, 1.0);
        sum += v;
    }
    for (auto& v : p) v /= sum;
    return p;
}

inline double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

}  // namespace testing
