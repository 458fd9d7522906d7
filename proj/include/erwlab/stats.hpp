#pragma once

#include <vector>

namespace erwlab::stats {

double normal_cdf(double x);

double mean(const std::vector<double>& v);
/// Sample variance with denominator n - 1.
double variance(const std::vector<double>& v);
/// Linear-interpolated quantile, q in [0, 1].
double quantile(std::vector<double> v, double q);
double median(const std::vector<double>& v);
double iqr(const std::vector<double>& v);

struct KsResult {
    double statistic = 0.0;
    double p_value = 0.0;
};

/// One-sample KS against N(0,1) after standardizing with the sample mean and sd.
/// Asymptotic Kolmogorov p-value with the Stephens small-sample correction.
KsResult ks_normal(const std::vector<double>& v);

/// Kolmogorov survival function P(K > lambda).
double kolmogorov_sf(double lambda);

/// Ordinary least squares slope of y on x.
double ols_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace erwlab::stats
