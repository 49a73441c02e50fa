#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

#include "mnn/error.hpp"
#include "mnn/mesh.hpp"

namespace mnn::stats {

/// Fraction of positions where prediction equals label.
inline double accuracy(std::span<const Label> predictions, std::span<const Label> labels) {
    if (predictions.empty()) throw InvalidArgument("accuracy of an empty sequence");
    detail::require(predictions.size() == labels.size(), "predictions and labels differ in length");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < predictions.size(); ++i) hits += predictions[i] == labels[i];
    return static_cast<double>(hits) / static_cast<double>(predictions.size());
}

/// Product-moment correlation, computed on centered values.
inline double pearson(std::span<const double> xs, std::span<const double> ys) {
    detail::require(xs.size() == ys.size(), "pearson needs equal-length series");
    detail::require(xs.size() >= 2, "pearson needs at least two points");
    const double n = static_cast<double>(xs.size());
    const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
    const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double dx = xs[i] - mx, dy = ys[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0 || syy == 0) throw InvalidArgument("correlation is undefined for a constant series");
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

struct PairedSeries {
    std::vector<double> first, second;

    void validate() const {
        detail::require(first.size() == second.size(), "paired series differ in length");
        detail::require(!first.empty(), "paired series is empty");
        for (std::size_t i = 0; i < first.size(); ++i)
            detail::require(std::isfinite(first[i]) && std::isfinite(second[i]), "paired series holds a non-finite value");
    }
};

enum class PMethod { Auto, Exact, Normal };

struct WilcoxonResult {
    double w_plus = 0;     // sum of ranks of positive differences
    double w_minus = 0;    // sum of ranks of negative differences
    double statistic = 0;  // min(w_plus, w_minus)
    double p_value = 1;    // two-sided
    std::size_t n = 0;     // nonzero differences used
    bool exact = false;
};

/// Average ranks (1-based) of |d|; tied magnitudes share their mean rank.
inline std::vector<double> average_ranks(std::span<const double> magnitudes) {
    std::vector<std::size_t> order(magnitudes.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return magnitudes[a] < magnitudes[b]; });
    std::vector<double> ranks(magnitudes.size());
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j + 1 < order.size() && magnitudes[order[j + 1]] == magnitudes[order[i]]) ++j;
        const double r = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
        i = j + 1;
    }
    return ranks;
}

inline constexpr std::size_t kExactWilcoxonLimit = 20;

/// Signed-rank test on the differences. Zero differences are dropped. The
/// exact p counts sign assignments through the null distribution of the
/// doubled rank sum; the normal p uses tie and continuity corrections.
inline WilcoxonResult wilcoxon_signed_rank(std::span<const double> differences, PMethod method = PMethod::Auto) {
    std::vector<double> mags;
    std::vector<bool> positive;
    for (double d : differences) {
        detail::require(std::isfinite(d), "non-finite difference");
        if (d == 0.0) continue;
        mags.push_back(std::abs(d));
        positive.push_back(d > 0);
    }
    if (mags.empty()) throw InvalidArgument("all differences are zero; the signed-rank test is degenerate");

    WilcoxonResult res;
    res.n = mags.size();
    const auto ranks = average_ranks(mags);
    for (std::size_t i = 0; i < ranks.size(); ++i) (positive[i] ? res.w_plus : res.w_minus) += ranks[i];
    res.statistic = std::min(res.w_plus, res.w_minus);

    const bool exact = method == PMethod::Exact || (method == PMethod::Auto && res.n <= kExactWilcoxonLimit);
    res.exact = exact;
    if (exact) {
        // Average ranks are multiples of 1/2, so doubled ranks are integers.
        std::vector<std::size_t> doubled(ranks.size());
        std::size_t total = 0;
        for (std::size_t i = 0; i < ranks.size(); ++i) total += doubled[i] = static_cast<std::size_t>(std::lround(2 * ranks[i]));
        std::vector<double> count(total + 1, 0.0);
        count[0] = 1;
        std::size_t reach = 0;
        for (auto r : doubled) {
            for (std::size_t s = reach + 1; s-- > 0;)
                if (count[s] != 0) count[s + r] += count[s];
            reach += r;
        }
        const auto w2 = static_cast<std::size_t>(std::lround(2 * res.statistic));
        double tail = 0;
        for (std::size_t s = 0; s <= w2; ++s) tail += count[s];
        res.p_value = std::min(1.0, 2.0 * tail / std::ldexp(1.0, static_cast<int>(res.n)));
    } else {
        const double n = static_cast<double>(res.n);
        const double mean = n * (n + 1) / 4;
        double tie_term = 0;
        std::vector<double> sorted = ranks;
        std::sort(sorted.begin(), sorted.end());
        for (std::size_t i = 0; i < sorted.size();) {
            std::size_t j = i;
            while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
            const double t = static_cast<double>(j - i);
            tie_term += t * t * t - t;
            i = j;
        }
        const double var = n * (n + 1) * (2 * n + 1) / 24 - tie_term / 48;
        if (var <= 0) {
            res.p_value = 1.0;
        } else {
            const double z = std::max(0.0, std::abs(res.statistic - mean) - 0.5) / std::sqrt(var);
            res.p_value = std::min(1.0, std::erfc(z / std::sqrt(2.0)));
        }
    }
    return res;
}

inline WilcoxonResult wilcoxon_signed_rank(const PairedSeries& pairs, PMethod method = PMethod::Auto) {
    pairs.validate();
    std::vector<double> d(pairs.first.size());
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = pairs.first[i] - pairs.second[i];
    return wilcoxon_signed_rank(d, method);
}

} // namespace mnn::stats
