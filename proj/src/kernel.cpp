#include "nck/kernel.hpp"

#include <algorithm>
#include <cmath>

#include "nck/errors.hpp"
#include "nck/parallel.hpp"
#include "nck/quadrature.hpp"

namespace nck {

double KernelEstimate::operator()(const Vec& x, const Vec& x_prime) const {
    double h = classifier(x, x_prime);
    counters_->evals.fetch_add(1, std::memory_order_relaxed);
    // p = h q / (1 - h) is singular only at h = 1, so only the upper side is
    // clamped; small h maps to small p with nothing to absorb.
    if (h > 1.0 - clamp_eps) {
        counters_->clamps.fetch_add(1, std::memory_order_relaxed);
        h = 1.0 - clamp_eps;
    }
    if (h < 0.0) h = 0.0;
    return h * contrast.density(x_prime) / (1.0 - h);
}

void KernelEstimate::reset_counters() const {
    counters_->clamps.store(0);
    counters_->evals.store(0);
}

KernelEstimate extract_p_eta(PairEvaluator h, ContrastSpec contrast, double clamp_eps) {
    if (!(clamp_eps > 0.0) || clamp_eps > 1e-3)
        throw invalid_input("extract_p_eta: clamp_eps must be in (0, 1e-3]");
    KernelEstimate k;
    k.classifier = std::move(h);
    k.contrast = std::move(contrast);
    k.clamp_eps = clamp_eps;
    return k;
}

NormalizationReport normalization_check(const KernelFn& kernel, const std::vector<Vec>& probes,
                                        const QuadratureSpec& quad) {
    if (probes.empty()) throw invalid_input("normalization_check: no probes");
    if (probes.front().size() != 1)
        throw unsupported_error("normalization_check: quadrature mode requires d = 1; use MC");
    NormalizationReport rep;
    rep.probes = probes;
    rep.masses.resize(probes.size());
    rep.standard_errors.assign(probes.size(), 0.0);
    par::for_each_index(probes.size(), [&](std::size_t i) {
        const Vec& x = probes[i];
        rep.masses[i] = integrate([&](double xp) { return kernel(x, Vec{xp}); },
                                  -quad.half_width, quad.half_width, quad.nodes);
    });
    double dev = 0.0;
    for (double m : rep.masses) dev = std::max(dev, std::abs(m - 1.0));
    rep.max_abs_deviation = dev;
    return rep;
}

NormalizationReport normalization_check_mc(const KernelFn& kernel, const ContrastSpec& contrast,
                                           const std::vector<Vec>& probes, const McSpec& mc) {
    if (probes.empty()) throw invalid_input("normalization_check: no probes");
    NormalizationReport rep;
    rep.probes = probes;
    rep.masses.resize(probes.size());
    rep.standard_errors.resize(probes.size());
    // common contrast sample across probes
    Rng rng(mc.seed);
    std::vector<Vec> draws(mc.samples);
    for (auto& d : draws) d = contrast.sample(rng);
    Vec qv(mc.samples);
    for (std::size_t s = 0; s < mc.samples; ++s) qv[s] = contrast.density(draws[s]);
    for (std::size_t i = 0; i < probes.size(); ++i) {
        const Vec& x = probes[i];
        Vec vals = par::materialize(mc.samples,
                                    [&](std::size_t s) { return kernel(x, draws[s]) / qv[s]; });
        const double mean = par::pairwise_sum(vals) / mc.samples;
        double ss = 0.0;
        for (double v : vals) ss += (v - mean) * (v - mean);
        rep.masses[i] = mean;
        rep.standard_errors[i] = std::sqrt(ss / (mc.samples - 1) / mc.samples);
    }
    double dev = 0.0;
    for (double m : rep.masses) dev = std::max(dev, std::abs(m - 1.0));
    rep.max_abs_deviation = dev;
    return rep;
}

}  // namespace nck
