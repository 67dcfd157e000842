#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

namespace hitchhike::stats {

/// Median; mean of the two middle values for even counts. Empty input yields NaN.
inline double median(std::span<const double> xs) {
    if (xs.empty()) return std::nan("");
    std::vector<double> v(xs.begin(), xs.end());
    auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
    std::nth_element(v.begin(), mid, v.end());
    double hi = *mid;
    if (v.size() % 2 == 1) return hi;
    double lo = *std::max_element(v.begin(), mid);
    return (lo + hi) / 2.0;
}

inline double mean(std::span<const double> xs) {
    if (xs.empty()) return std::nan("");
    return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

/// Population standard deviation.
inline double stddev(std::span<const double> xs) {
    if (xs.empty()) return std::nan("");
    double m = mean(xs);
    double acc = 0.0;
    for (double x : xs) acc += (x - m) * (x - m);
    return std::sqrt(acc / static_cast<double>(xs.size()));
}

/// 1-based fractional ranks with ties sharing their average rank.
inline std::vector<double> average_ranks(std::span<const double> xs) {
    std::vector<std::size_t> idx(xs.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return xs[a] < xs[b]; });
    std::vector<double> ranks(xs.size());
    for (std::size_t i = 0; i < idx.size();) {
        std::size_t j = i;
        while (j + 1 < idx.size() && xs[idx[j + 1]] == xs[idx[i]]) ++j;
        double r = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[idx[k]] = r;
        i = j + 1;
    }
    return ranks;
}

inline std::optional<double> pearson(std::span<const double> xs, std::span<const double> ys) {
    if (xs.size() != ys.size() || xs.size() < 2) return std::nullopt;
    double mx = mean(xs), my = mean(ys);
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxy += (xs[i] - mx) * (ys[i] - my);
        sxx += (xs[i] - mx) * (xs[i] - mx);
        syy += (ys[i] - my) * (ys[i] - my);
    }
    if (sxx == 0 || syy == 0) return std::nullopt;
    return sxy / std::sqrt(sxx * syy);
}

/// Spearman rank correlation (Pearson on average ranks). Needs at least 3 points.
inline std::optional<double> spearman(std::span<const double> xs, std::span<const double> ys) {
    if (xs.size() != ys.size() || xs.size() < 3) return std::nullopt;
    auto rx = average_ranks(xs);
    auto ry = average_ranks(ys);
    return pearson(rx, ry);
}

} // namespace hitchhike::stats
