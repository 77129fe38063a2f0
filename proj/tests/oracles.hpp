#pragma once

// Independent reference implementations. Written from the defining formulas
// with plain loops and no shared code with the library.

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace oracle {

inline double epanechnikov(double u) {
    return std::fabs(u) <= 1.0 ? 0.75 * (1.0 - u * u) : 0.0;
}

/// Direct Nadaraya-Watson sum with the same empty-window fallback
/// (double h up to `doublings` times, then nearest neighbour, lower s on ties).
inline double nadaraya_watson(const std::vector<double>& s, const std::vector<double>& y, double h, double x,
                              int doublings = 10, double weight_scale = 1.0) {
    double bw = h;
    for (int k = 0; k <= doublings; ++k, bw *= 2.0) {
        double num = 0.0;
        double den = 0.0;
        for (std::size_t i = 0; i < s.size(); ++i) {
            const double w = weight_scale * epanechnikov((s[i] - x) / bw) / bw;
            num += w * y[i];
            den += w;
        }
        if (den > 0.0) return num / den;
    }
    double best = std::numeric_limits<double>::infinity();
    double best_s = 0.0;
    double value = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        const double d = std::fabs(s[i] - x);
        if (d < best || (d == best && s[i] < best_s)) {
            best = d;
            best_s = s[i];
            value = y[i];
        }
    }
    return value;
}

/// Smallest k (1-based) with k/J >= alpha, found by scanning, then the k-th
/// element of a fully sorted copy.
inline double sorted_quantile(std::vector<double> x, double alpha) {
    std::sort(x.begin(), x.end());
    const std::size_t n = x.size();
    for (std::size_t k = 1; k <= n; ++k)
        if (static_cast<double>(k) / static_cast<double>(n) >= alpha) return x[k - 1];
    return x.back();
}

inline double mean(const std::vector<double>& x) {
    double acc = 0.0;
    for (double v : x) acc += v;
    return acc / static_cast<double>(x.size());
}

inline double variance(const std::vector<double>& x) {
    const double m = mean(x);
    double acc = 0.0;
    for (double v : x) acc += (v - m) * (v - m);
    return acc / static_cast<double>(x.size() - 1);
}

/// (1/n^2) sum_ij sigma2 exp(-(s_i - s_j)^2 / (2 theta^2)).
inline double gp_mean_variance(const std::vector<double>& s, double sigma2, double theta) {
    double acc = 0.0;
    for (double a : s)
        for (double b : s) acc += sigma2 * std::exp(-(a - b) * (a - b) / (2.0 * theta * theta));
    return acc / static_cast<double>(s.size() * s.size());
}

/// Polynomial basis column means times variances: sum_j Sigma_jj (mean_i z_i^j)^2.
inline double polynomial_mean_variance(const std::vector<double>& s, double center, double scale,
                                       const std::vector<double>& sigma_diag) {
    double total = 0.0;
    for (std::size_t j = 0; j < sigma_diag.size(); ++j) {
        double col = 0.0;
        for (double v : s) col += std::pow((v - center) / scale, static_cast<double>(j));
        col /= static_cast<double>(s.size());
        total += sigma_diag[j] * col * col;
    }
    return total;
}

inline double fourier_mean_variance(const std::vector<double>& s, double offset, const std::vector<double>& periods,
                                    const std::vector<double>& sigma_diag) {
    double total = sigma_diag[0];
    for (std::size_t j = 1; j < sigma_diag.size(); ++j) {
        double col = 0.0;
        for (double v : s) col += std::sin((v - offset) / periods[j - 1]) + std::cos((v - offset) / periods[j - 1]);
        col /= static_cast<double>(s.size());
        total += sigma_diag[j] * col * col;
    }
    return total;
}

/// Standard normal cdf and quantile from erfc and bisection, independent of Boost.
inline double phi_cdf(double z) {
    return 0.5 * std::erfc(-z / std::sqrt(2.0));
}

inline double phi_quantile(double p) {
    double lo = -40.0;
    double hi = 40.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (phi_cdf(mid) < p ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

inline double phi_density(double z) {
    return std::exp(-0.5 * z * z) / std::sqrt(2.0 * M_PI);
}

} // namespace oracle
