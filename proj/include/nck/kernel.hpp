#pragma once

#include <atomic>
#include <cstdint>
#include <memory>

#include "nck/classifier.hpp"

namespace nck {

using KernelFn = std::function<double(const Vec&, const Vec&)>;

// Transition-kernel estimate implied by a classifier:
// p(x, x') = clamp(h) q(x') / (1 - clamp(h)), clamp into [eps, 1-eps].
// Clamp events are counted; the estimate is NOT renormalized.
struct KernelEstimate {
    PairEvaluator classifier;
    ContrastSpec contrast;
    double clamp_eps = 1e-6;

    double operator()(const Vec& x, const Vec& x_prime) const;

    std::uint64_t clamp_events() const { return counters_->clamps.load(); }
    std::uint64_t eval_count() const { return counters_->evals.load(); }
    void reset_counters() const;

    struct Counters {
        std::atomic<std::uint64_t> clamps{0};
        std::atomic<std::uint64_t> evals{0};
    };
    std::shared_ptr<Counters> counters_ = std::make_shared<Counters>();
};

KernelEstimate extract_p_eta(PairEvaluator h, ContrastSpec contrast, double clamp_eps);

struct QuadratureSpec {
    int nodes = 256;
    double half_width = 10.0;  // x' integration domain [-hw, hw]
};

struct McSpec {
    std::size_t samples = 1000000;
    std::uint64_t seed = 0;
};

struct NormalizationReport {
    std::vector<Vec> probes;
    Vec masses;                 // integral of p(x, .) per probe
    Vec standard_errors;        // zero in quadrature mode
    double max_abs_deviation;   // max |mass - 1|
};

// d = 1: Gauss-Legendre over x'. Throws unsupported_error for d > 1.
NormalizationReport normalization_check(const KernelFn& kernel, const std::vector<Vec>& probes,
                                        const QuadratureSpec& quad);

// Any d: importance sampling under the contrast, mass = E_q[p/q].
NormalizationReport normalization_check_mc(const KernelFn& kernel, const ContrastSpec& contrast,
                                           const std::vector<Vec>& probes, const McSpec& mc);

}  // namespace nck
