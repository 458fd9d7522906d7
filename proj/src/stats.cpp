#include "erwlab/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace erwlab::stats {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double mean(const std::vector<double>& v) {
    if (v.empty()) return 0.0;
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double variance(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    const double m = mean(v);
    double ss = 0.0;
    for (double x : v) ss += (x - m) * (x - m);
    return ss / static_cast<double>(v.size() - 1);
}

double quantile(std::vector<double> v, double q) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const double pos = q * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

double median(const std::vector<double>& v) { return quantile(v, 0.5); }

double iqr(const std::vector<double>& v) { return quantile(v, 0.75) - quantile(v, 0.25); }

double kolmogorov_sf(double lambda) {
    if (lambda <= 0.0) return 1.0;
    if (lambda < 0.2) return 1.0;
    double sum = 0.0;
    for (int k = 1; k <= 200; ++k) {
        const double term = std::exp(-2.0 * k * k * lambda * lambda);
        sum += (k & 1 ? 2.0 : -2.0) * term;
        if (term < 1e-18) break;
    }
    return std::clamp(sum, 0.0, 1.0);
}

KsResult ks_normal(const std::vector<double>& v) {
    KsResult res;
    const std::size_t n = v.size();
    if (n < 2) return res;
    const double m = mean(v), sd = std::sqrt(variance(v));
    if (!(sd > 0.0)) {
        res.statistic = 1.0;
        return res;
    }
    std::vector<double> z(n);
    for (std::size_t i = 0; i < n; ++i) z[i] = (v[i] - m) / sd;
    std::sort(z.begin(), z.end());
    double D = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double F = normal_cdf(z[i]);
        D = std::max({D, static_cast<double>(i + 1) / n - F, F - static_cast<double>(i) / n});
    }
    const double sn = std::sqrt(static_cast<double>(n));
    res.statistic = D;
    res.p_value = kolmogorov_sf((sn + 0.12 + 0.11 / sn) * D);
    return res;
}

double ols_slope(const std::vector<double>& x, const std::vector<double>& y) {
    const double mx = mean(x), my = mean(y);
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
    }
    return sxx > 0.0 ? sxy / sxx : 0.0;
}

}  // namespace erwlab::stats
