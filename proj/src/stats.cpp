#include "nck/stats.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "nck/parallel.hpp"
#include "nck/quadrature.hpp"

namespace nck {

MeanSe mean_se(std::span<const double> xs) {
    const std::size_t n = xs.size();
    if (n == 0) throw std::invalid_argument("mean_se: empty sample");
    const double m = sample_mean(xs);
    if (n == 1) return {m, 0.0, n};
    double ss = 0.0;
    for (double x : xs) ss += (x - m) * (x - m);
    return {m, std::sqrt(ss / (n - 1) / n), n};
}

double sample_mean(std::span<const double> xs) {
    if (xs.empty()) throw std::invalid_argument("sample_mean: empty sample");
    std::vector<double> buf(xs.begin(), xs.end());
    return par::pairwise_sum(buf) / xs.size();
}

double sample_variance(std::span<const double> xs) {
    const std::size_t n = xs.size();
    if (n < 2) throw std::invalid_argument("sample_variance: need n >= 2");
    const double m = sample_mean(xs);
    double ss = 0.0;
    for (double x : xs) ss += (x - m) * (x - m);
    return ss / (n - 1);
}

double pearson(std::span<const double> xs, std::span<const double> ys) {
    if (xs.size() != ys.size() || xs.size() < 2)
        throw std::invalid_argument("pearson: bad sample sizes");
    const double mx = sample_mean(xs), my = sample_mean(ys);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxy += (xs[i] - mx) * (ys[i] - my);
        sxx += (xs[i] - mx) * (xs[i] - mx);
        syy += (ys[i] - my) * (ys[i] - my);
    }
    if (sxx == 0.0 || syy == 0.0) return 0.0;
    return sxy / std::sqrt(sxx * syy);
}

namespace {

Vec ranks(std::span<const double> xs) {
    std::vector<std::size_t> idx(xs.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
    Vec r(xs.size());
    std::size_t i = 0;
    while (i < idx.size()) {
        std::size_t j = i;
        while (j + 1 < idx.size() && xs[idx[j + 1]] == xs[idx[i]]) ++j;
        const double rank = 0.5 * (i + j) + 1.0;  // average rank for ties
        for (std::size_t k = i; k <= j; ++k) r[idx[k]] = rank;
        i = j + 1;
    }
    return r;
}

}  // namespace

double spearman(std::span<const double> xs, std::span<const double> ys) {
    const Vec rx = ranks(xs), ry = ranks(ys);
    return pearson(rx, ry);
}

double autocorrelation(std::span<const double> xs, std::size_t lag) {
    const std::size_t n = xs.size();
    if (n <= lag + 1) throw std::invalid_argument("autocorrelation: sample too short");
    const double m = sample_mean(xs);
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i + lag < n; ++i) num += (xs[i] - m) * (xs[i + lag] - m);
    for (std::size_t i = 0; i < n; ++i) den += (xs[i] - m) * (xs[i] - m);
    return num / den;
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double chi2_label_independence(std::span<const double> xs, std::span<const int> labels,
                               int bins) {
    if (xs.size() != labels.size() || xs.empty())
        throw std::invalid_argument("chi2: bad sample");
    std::vector<double> sorted(xs.begin(), xs.end());
    std::sort(sorted.begin(), sorted.end());
    // equal-count bin edges (quantiles)
    Vec edges(bins - 1);
    for (int b = 1; b < bins; ++b)
        edges[b - 1] = sorted[std::min(sorted.size() - 1, (sorted.size() * b) / bins)];
    std::vector<std::array<double, 2>> counts(bins, {0.0, 0.0});
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const int b = static_cast<int>(std::upper_bound(edges.begin(), edges.end(), xs[i]) -
                                       edges.begin());
        counts[b][labels[i] ? 1 : 0] += 1.0;
    }
    double n1 = 0.0;
    for (int l : labels) n1 += (l ? 1.0 : 0.0);
    const double n = static_cast<double>(xs.size());
    const double p1 = n1 / n;
    double stat = 0.0;
    for (int b = 0; b < bins; ++b) {
        const double row = counts[b][0] + counts[b][1];
        if (row == 0.0) continue;
        const double e1 = row * p1, e0 = row * (1.0 - p1);
        if (e1 > 0.0) stat += (counts[b][1] - e1) * (counts[b][1] - e1) / e1;
        if (e0 > 0.0) stat += (counts[b][0] - e0) * (counts[b][0] - e0) / e0;
    }
    return stat;
}

double chi2_critical_p01(int df) {
    // chi-squared upper 1% points
    static const double table[] = {6.635, 9.210,  11.345, 13.277, 15.086, 16.812, 18.475,
                                   20.090, 21.666, 23.209, 24.725, 26.217, 27.688, 29.141,
                                   30.578, 32.000, 33.409, 34.805, 36.191, 37.566};
    if (df < 1 || df > 20) throw std::invalid_argument("chi2_critical_p01: df out of range");
    return table[df - 1];
}

double tv_histogram_vs_density(std::span<const double> sample,
                               const std::function<double(double)>& density, double lo,
                               double hi, int bins) {
    const double w = (hi - lo) / bins;
    Vec emp(bins, 0.0);
    double inside = 0.0;
    for (double x : sample) {
        if (x < lo || x >= hi) continue;
        emp[static_cast<int>((x - lo) / w)] += 1.0;
        inside += 1.0;
    }
    const double n = static_cast<double>(sample.size());
    double tv = 0.0;
    for (int b = 0; b < bins; ++b) {
        const double mass = integrate(density, lo + b * w, lo + (b + 1) * w, 8);
        tv += std::abs(emp[b] / n - mass);
    }
    // mass that fell outside [lo, hi) on either side
    tv += std::abs((n - inside) / n - (1.0 - integrate(density, lo, hi, 64)));
    return 0.5 * tv;
}

double tv_histogram_vs_histogram(std::span<const double> a, std::span<const double> b,
                                 double lo, double hi, int bins) {
    const double w = (hi - lo) / bins;
    Vec ea(bins + 1, 0.0), eb(bins + 1, 0.0);  // last cell: outside
    for (double x : a) {
        if (x < lo || x >= hi) ea[bins] += 1.0;
        else ea[static_cast<int>((x - lo) / w)] += 1.0;
    }
    for (double x : b) {
        if (x < lo || x >= hi) eb[bins] += 1.0;
        else eb[static_cast<int>((x - lo) / w)] += 1.0;
    }
    double tv = 0.0;
    for (int k = 0; k <= bins; ++k) tv += std::abs(ea[k] / a.size() - eb[k] / b.size());
    return 0.5 * tv;
}

}  // namespace nck
