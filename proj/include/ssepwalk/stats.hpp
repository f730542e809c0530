#pragma once

// Statistical utilities used by the estimators and the tests: normal-theory
// confidence intervals, Wilson intervals, the one-sample Kolmogorov-Smirnov
// test against N(0,1), and two concentration bounds (Hoeffding and a Gaussian
// tail bound).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <vector>

#include "ssepwalk/errors.hpp"

namespace ssepwalk::stats {

// Two-sided standard normal quantiles.
inline constexpr double kZ95 = 1.959963984540054;
inline constexpr double kZ99 = 2.5758293035489004;

// Quantile for a supported confidence level (0.95 or 0.99).
inline double z_for_level(double level) {
    if (level == 0.95) return kZ95;
    if (level == 0.99) return kZ99;
    throw Error("unsupported confidence level; use 0.95 or 0.99");
}

struct SampleSummary {
    std::size_t n = 0;
    double mean = 0.0;
    double variance = 0.0;  // unbiased; 0 when n == 1
    double min = 0.0;
    double max = 0.0;
};

// Welford pass over the samples.
inline SampleSummary summarize(std::span<const double> xs) {
    if (xs.empty()) throw TooFewSamples(0, 1);
    SampleSummary s;
    s.min = s.max = xs.front();
    double m2 = 0.0;
    for (double x : xs) {
        ++s.n;
        const double delta = x - s.mean;
        s.mean += delta / static_cast<double>(s.n);
        m2 += delta * (x - s.mean);
        s.min = std::min(s.min, x);
        s.max = std::max(s.max, x);
    }
    s.variance = s.n > 1 ? std::max(0.0, m2 / static_cast<double>(s.n - 1)) : 0.0;
    return s;
}

struct MeanCI {
    double mean = 0.0;
    double se = 0.0;
    double half_width = 0.0;

    double lo() const noexcept { return mean - half_width; }
    double hi() const noexcept { return mean + half_width; }
    bool contains(double v) const noexcept { return v >= lo() && v <= hi(); }
};

// Normal-approximation interval: half-width = z * s / sqrt(n).
inline MeanCI mean_ci(std::span<const double> xs, double level = 0.99) {
    if (xs.size() < 2) throw TooFewSamples(xs.size(), 2);
    const auto s = summarize(xs);
    MeanCI ci;
    ci.mean = s.mean;
    ci.se = std::sqrt(s.variance / static_cast<double>(s.n));
    ci.half_width = z_for_level(level) * ci.se;
    return ci;
}

// Sample covariance with a standard error from the spread of the centred
// products (delta method, first order).
struct CovarianceEstimate {
    double cov = 0.0;
    double se = 0.0;
};

inline CovarianceEstimate covariance(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw Error("covariance: sample sizes differ");
    if (a.size() < 2) throw TooFewSamples(a.size(), 2);
    const auto n = a.size();
    const double ma = summarize(a).mean;
    const double mb = summarize(b).mean;
    std::vector<double> prod(n);
    for (std::size_t i = 0; i < n; ++i) prod[i] = (a[i] - ma) * (b[i] - mb);
    const auto ps = summarize(prod);
    CovarianceEstimate out;
    out.cov = ps.mean * static_cast<double>(n) / static_cast<double>(n - 1);
    out.se = std::sqrt(ps.variance / static_cast<double>(n));
    return out;
}

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
};

// Wilson score interval for k successes out of n.
inline Interval wilson_interval(std::size_t k, std::size_t n, double level = 0.95) {
    if (n == 0) throw TooFewSamples(0, 1);
    const double z = z_for_level(level);
    const double nn = static_cast<double>(n);
    const double p = static_cast<double>(k) / nn;
    const double z2 = z * z;
    const double denom = 1.0 + z2 / nn;
    const double centre = (p + z2 / (2.0 * nn)) / denom;
    const double half = z * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn)) / denom;
    return {std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

// P(K > x) for the limiting Kolmogorov distribution K = sup |Brownian bridge|.
inline double kolmogorov_survival(double x) {
    if (x <= 0.0) return 1.0;
    if (x < 1.18) {
        // Theta-function form converges fast for small x.
        const double pi2 = std::numbers::pi * std::numbers::pi;
        double cdf = 0.0;
        for (int k = 1; k <= 50; ++k) {
            const double m = 2.0 * k - 1.0;
            const double term = std::exp(-m * m * pi2 / (8.0 * x * x));
            cdf += term;
            if (term < 1e-300) break;
        }
        cdf *= std::sqrt(2.0 * std::numbers::pi) / x;
        return std::clamp(1.0 - cdf, 0.0, 1.0);
    }
    double q = 0.0;
    double sign = 1.0;
    for (int k = 1; k <= 100; ++k) {
        const double term = std::exp(-2.0 * k * k * x * x);
        q += sign * term;
        if (term < 1e-17) break;
        sign = -sign;
    }
    return std::clamp(2.0 * q, 0.0, 1.0);
}

struct KsResult {
    std::size_t n = 0;
    double statistic = 0.0;
    double p_value = 1.0;
};

// One-sample KS test against N(0,1). The p-value evaluates the limiting
// Kolmogorov law at Stephens' scaled statistic (sqrt(n) + 0.12 + 0.11/sqrt(n)) D,
// which keeps the null p-values close to uniform down to n of a few dozen.
inline KsResult ks_normal(std::span<const double> xs) {
    constexpr std::size_t kMinSamples = 20;
    if (xs.size() < kMinSamples) throw TooFewSamples(xs.size(), kMinSamples);
    std::vector<double> sorted(xs.begin(), xs.end());
    std::sort(sorted.begin(), sorted.end());
    const double n = static_cast<double>(sorted.size());
    double d = 0.0;
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        const double f = normal_cdf(sorted[i]);
        const double i_d = static_cast<double>(i);
        d = std::max({d, (i_d + 1.0) / n - f, f - i_d / n});
    }
    const double sqrt_n = std::sqrt(n);
    return {sorted.size(), d, kolmogorov_survival((sqrt_n + 0.12 + 0.11 / sqrt_n) * d)};
}

// Hoeffding-type bound P(|sum b_j zeta_j| > t) <= 2 exp(-t^2 / (2 sum b_j^2))
// for i.i.d. centred |zeta_j| <= 1.
inline double hoeffding_bound(std::span<const double> weights, double threshold) {
    if (!(threshold > 0.0)) throw Error("hoeffding_bound: threshold must be positive");
    double sum_sq = 0.0;
    for (double b : weights) sum_sq += b * b;
    if (sum_sq == 0.0) throw DegenerateWeights();
    return 2.0 * std::exp(-threshold * threshold / (2.0 * sum_sq));
}

// Upper bound sqrt(2 pi sigma^2) exp(-delta^2 / (2 sigma^2)) on
// the integral of exp(-x^2 / (2 sigma^2)) over [delta, inf).
inline double gaussian_tail_bound(double delta, double sigma_sq) {
    if (!(delta > 0.0) || !(sigma_sq > 0.0))
        throw Error("gaussian_tail_bound: delta and sigma^2 must be positive");
    return std::sqrt(2.0 * std::numbers::pi * sigma_sq) * std::exp(-delta * delta / (2.0 * sigma_sq));
}

}  // namespace ssepwalk::stats
