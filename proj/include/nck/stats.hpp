#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace nck {

using Vec = std::vector<double>;

struct MeanSe {
    double mean;
    double se;      // standard error of the mean
    std::size_t n;
};

MeanSe mean_se(std::span<const double> xs);

double sample_mean(std::span<const double> xs);
double sample_variance(std::span<const double> xs);  // unbiased

double pearson(std::span<const double> xs, std::span<const double> ys);
double spearman(std::span<const double> xs, std::span<const double> ys);

// Autocorrelation at a given lag (biased normalization by n).
double autocorrelation(std::span<const double> xs, std::size_t lag);

double normal_cdf(double x);

// Chi-squared statistic for independence of a binary label from a scalar
// covariate, using `bins` equal-count bins. Degrees of freedom = bins - 1.
double chi2_label_independence(std::span<const double> xs, std::span<const int> labels,
                               int bins);
// Upper critical values chi2_{df, 0.01} for df = bins - 1 (df in [1, 20]).
double chi2_critical_p01(int df);

// TV between a sample histogram and a density on `bins` equal-width bins over
// [lo, hi]; bin masses of the density by Gauss-Legendre.
double tv_histogram_vs_density(std::span<const double> sample,
                               const std::function<double(double)>& density, double lo,
                               double hi, int bins);

double tv_histogram_vs_histogram(std::span<const double> a, std::span<const double> b,
                                 double lo, double hi, int bins);

}  // namespace nck
