#pragma once

#include <algorithm>
#include <cmath>
#include <span>

// Exhaustive dynamic-time-warping reference: walks every monotone alignment
// path and keeps the cheapest. Exponential, fine for the short sequences the
// tests feed it. Over values from {0, 0.5, 1} every partial sum is an exact
// binary fraction, so comparing against the DP implementation with == is
// well defined.
inline double dtw_exhaustive(std::span<const double> x, std::span<const double> y) {
    const std::size_t n = x.size(), m = y.size();
    auto rec = [&](auto&& self, std::size_t i, std::size_t j) -> double {
        const double local = std::fabs(x[i] - y[j]);
        if (i + 1 == n && j + 1 == m) return local;
        double best = std::numeric_limits<double>::infinity();
        if (i + 1 < n) best = std::min(best, self(self, i + 1, j));
        if (j + 1 < m) best = std::min(best, self(self, i, j + 1));
        if (i + 1 < n && j + 1 < m) best = std::min(best, self(self, i + 1, j + 1));
        return local + best;
    };
    return rec(rec, 0, 0);
}
