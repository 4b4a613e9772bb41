#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <utility>
#include <vector>

namespace cmperc {

// Two-sample Kolmogorov-Smirnov statistic sup_x |F_a(x) - F_b(x)|.
inline double ks_distance(std::vector<double> a, std::vector<double> b) {
    if (a.empty() || b.empty())
        throw std::invalid_argument("ks_distance: empty sample");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    std::size_t ia = 0, ib = 0;
    double d = 0.0;
    while (ia < a.size() && ib < b.size()) {
        const double x = std::min(a[ia], b[ib]);
        while (ia < a.size() && a[ia] <= x) ++ia;
        while (ib < b.size() && b[ib] <= x) ++ib;
        d = std::max(d, std::abs(static_cast<double>(ia) / na -
                                 static_cast<double>(ib) / nb));
    }
    return d;
}

struct FitResult {
    double slope = 0.0;
    double intercept = 0.0;
    double stderr_slope = 0.0;
    double r_squared = 0.0;
};

enum class FitMode { power_law, log_growth };

// Least squares on (log n, log value) for power-law exponents, or on
// (log n, value) for log-growth checks.
inline FitResult fit_exponent(const std::vector<std::pair<double, double>>& pairs,
                              FitMode mode = FitMode::power_law) {
    if (pairs.size() < 3)
        throw std::invalid_argument("fit_exponent: need at least 3 ladder points");
    std::vector<double> x, y;
    for (const auto& [n, v] : pairs) {
        if (!(n > 0.0)) throw std::invalid_argument("fit_exponent: non-positive n");
        x.push_back(std::log(n));
        if (mode == FitMode::power_law) {
            if (!(v > 0.0))
                throw std::invalid_argument("fit_exponent: non-positive value");
            y.push_back(std::log(v));
        } else {
            y.push_back(v);
        }
    }
    const auto m = static_cast<double>(x.size());
    const double xbar = std::accumulate(x.begin(), x.end(), 0.0) / m;
    const double ybar = std::accumulate(y.begin(), y.end(), 0.0) / m;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - xbar) * (x[i] - xbar);
        sxy += (x[i] - xbar) * (y[i] - ybar);
        syy += (y[i] - ybar) * (y[i] - ybar);
    }
    if (sxx == 0.0) throw std::invalid_argument("fit_exponent: degenerate ladder");
    FitResult fit;
    fit.slope = sxy / sxx;
    fit.intercept = ybar - fit.slope * xbar;
    double ssr = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double r = y[i] - (fit.intercept + fit.slope * x[i]);
        ssr += r * r;
    }
    fit.stderr_slope = x.size() > 2 ? std::sqrt(ssr / (m - 2.0) / sxx) : 0.0;
    fit.r_squared = syy > 0.0 ? 1.0 - ssr / syy : 1.0;
    return fit;
}

inline double mean(const std::vector<double>& v) {
    if (v.empty()) throw std::invalid_argument("mean: empty sample");
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

inline double sample_sd(const std::vector<double>& v) {
    if (v.size() < 2) throw std::invalid_argument("sample_sd: need >= 2 points");
    const double m = mean(v);
    double acc = 0.0;
    for (double x : v) acc += (x - m) * (x - m);
    return std::sqrt(acc / static_cast<double>(v.size() - 1));
}

inline double quantile(std::vector<double> v, double q) {
    if (v.empty()) throw std::invalid_argument("quantile: empty sample");
    std::sort(v.begin(), v.end());
    const double pos = q * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, v.size() - 1);
    const double w = pos - std::floor(pos);
    return v[lo] * (1.0 - w) + v[hi] * w;
}

inline double median(std::vector<double> v) { return quantile(std::move(v), 0.5); }

} // namespace cmperc
