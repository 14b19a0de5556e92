#pragma once

#include <map>
#include <optional>
#include <string>

#include "nck/kernel.hpp"
#include "nck/pairs.hpp"
#include "nck/stats.hpp"

namespace nck {

// Quadrature layout for the d = 1 theorem checks: x integrates over
// [-box_radius, box_radius] under pi, x' over the box widened by
// xp_margin_sds kernel standard deviations so kernel mass is not truncated.
struct TheoryQuad {
    int nodes = 256;
    double box_radius = 4.0;
    double xp_margin_sds = 8.0;
};

struct McEstimate {
    double value;
    double se;
};

struct TheoremInputs {
    double eta = 0.0;
    int d = 1;
    double rho = 1.0;
    double c_q = 1.0;
    double log_c_q = 0.0;
    double eps_tr = 0.0;
    double eps_star = 0.0;
    double delta_min = 1.0;
    double delta_max = 1.0;
};

struct TheoremReport {
    std::string theorem;
    TheoremInputs inputs;
    double lhs = 0.0;
    double rhs = 0.0;
    double rhs_log10 = 0.0;     // finite even when rhs overflows double
    bool rhs_overflow = false;
    bool hypothesis_satisfied = true;
    bool pass = false;
    std::string method_notes;
    std::map<std::string, double> extra;
};

// --- risks -----------------------------------------------------------------

// Bayes risk of the pair task: E[P(1-P)] with P = p*/(p* + q), expectation
// over x ~ pi, x' ~ (p* + q)/2.
double epsilon_star_quad(const PotentialSpec& spec, const ContrastSpec& contrast, double eta,
                         const TheoryQuad& quad);
McEstimate epsilon_star_mc(const PotentialSpec& spec, const ContrastSpec& contrast, double eta,
                           std::size_t n_mc, std::uint64_t seed);

// Population risk R(l o h); the Bernoulli label is integrated analytically:
// E_y[(h - y)^2 | x, x'] = P(1-P) + (h - P)^2.
double population_risk_quad(const PairEvaluator& h, const PotentialSpec& spec,
                            const ContrastSpec& contrast, double eta, const TheoryQuad& quad);
McEstimate population_risk_mc(const PairEvaluator& h, const PotentialSpec& spec,
                              const ContrastSpec& contrast, double eta, std::size_t n_mc,
                              std::uint64_t seed);

// Excess population risk over the Bayes optimum, computed directly as
// E_{pi, (p*+q)/2} (h - h*)^2 (no cancellation).
double excess_risk_quad(const PairEvaluator& h, const PotentialSpec& spec,
                        const ContrastSpec& contrast, double eta, const TheoryQuad& quad);

// Shared Monte-Carlo pair sets, for paired comparisons across many models.
struct PairSample {
    Vec x, x_prime;
    double p_star;   // p*(x, x')
    double q;        // q(x')
    double bayes;    // P = p*/(p*+q)
};
std::vector<PairSample> make_pair_samples(const PotentialSpec& spec,
                                          const ContrastSpec& contrast, double eta,
                                          std::size_t n, std::uint64_t seed);
MeanSe population_risk_on(const PairEvaluator& h, std::span<const PairSample> samples);
MeanSe epsilon_star_on(std::span<const PairSample> samples);
// SE of (risk(h) - eps*) on a shared sample: the paired difference (h-P)^2.
MeanSe excess_risk_on(const PairEvaluator& h, std::span<const PairSample> samples);

// --- perturbed kernels -------------------------------------------------------

enum class DeltaKind { ConstantOnBand, SmoothBump };

// Relative perturbation acting on the standardized kernel residual
// z = (x' - mean_eta(x)) / sd_eta; antisymmetric in z, so the perturbed
// kernel integrates to exactly 1 for every x.
struct DeltaSpec {
    DeltaKind kind = DeltaKind::SmoothBump;
    double amplitude = 0.1;
    double center = 1.0;
    double width = 0.5;
};

struct PerturbedKernel {
    PotentialSpec spec;
    double eta;
    DeltaSpec delta;
    double delta_min = 1.0;  // measured extremes of p/p* on the box
    double delta_max = 1.0;

    double delta_at(const Vec& x, const Vec& x_prime) const;
    double operator()(const Vec& x, const Vec& x_prime) const;
    KernelFn fn() const;
};

PerturbedKernel make_perturbed_kernel(const PotentialSpec& spec, double eta,
                                      const DeltaSpec& delta, double target_delta_max,
                                      bool theorem_kl_gate = false, double box_radius = 4.0,
                                      int grid_per_axis = 201);

// --- divergences -------------------------------------------------------------

// E_{x ~ pi} KL(p*(.|x) || p(.|x)) by quadrature (d = 1).
double kl_to_truth(const KernelFn& p, const PotentialSpec& spec, double eta,
                   const TheoryQuad& quad);
McEstimate kl_to_truth_mc(const KernelFn& p, const PotentialSpec& spec, double eta,
                          std::size_t n_mc, std::uint64_t seed);

// E_{x ~ pi, x' ~ p*(.|x)} |p - p*| (weights density values by the true
// kernel; not a TV distance).
double l1_to_truth(const KernelFn& p, const PotentialSpec& spec, double eta,
                   const TheoryQuad& quad);
McEstimate l1_to_truth_mc(const KernelFn& p, const PotentialSpec& spec, double eta,
                          std::size_t n_mc, std::uint64_t seed);

// Cauchy-Schwarz second factor: E_{pi, p*}[(max(p, p*) + q)^4 / q^2].
double t2_term(const KernelFn& p, const PotentialSpec& spec, const ContrastSpec& contrast,
               double eta, const TheoryQuad& quad);

// --- theorem checks ----------------------------------------------------------

struct DeltaRange {
    double delta_min, delta_max;
    Vec argmin_x, argmin_xp, argmax_x, argmax_xp;
    bool ordering_ok;  // delta_min <= 1 <= delta_max (flag only)
};
DeltaRange delta_min_max(const KernelFn& p, const PotentialSpec& spec, double eta,
                         const std::vector<Vec>& grid_x, const std::vector<Vec>& grid_xp);

// KL theorem: lhs = E_pi KL(p* || p), rhs = 2 (1+c_q)^5 eps_tr / delta_min^2,
// hypotheses: delta_max <= 7/6 and finite c_q on the box.
TheoremReport theorem_kl_check(const KernelFn& p, double measured_delta_min,
                               double measured_delta_max, const PotentialSpec& spec,
                               const ContrastSpec& contrast, double eta,
                               const TheoryQuad& quad, const CqResult& cq);

// L1 theorem: lhs = E|p - p*|; rigorous bound sqrt(2 eps_tr) sqrt(T2)
// decides pass; the constant-free proxy sqrt(2 eps_tr) sqrt(pi(0))
// (1/(rho eta^2))^{d/4} is recorded for scaling.
TheoremReport theorem_orig_check(const KernelFn& p, const PotentialSpec& spec,
                                 const ContrastSpec& contrast, double eta,
                                 const TheoryQuad& quad);

// --- curvature ---------------------------------------------------------------

// r(delta) = (p* q delta / ((p*(1+delta)+q)(p*+q)))^2, the per-point excess
// loss as a function of the relative perturbation.
double curvature_r(double p_star, double q, double delta);
double curvature_rpp_fd(double p_star, double q, double delta, double step = 1e-4);
double curvature_rpp_analytic(double p_star, double q, double delta);

struct CurvatureReport {
    double min_rpp;
    double floor;          // 2 / (1 + c_q)^5 with c_q observed on the grid
    double cq_on_grid;
    double log_cq_on_grid;
    bool pass;             // min_rpp >= floor - 1e-6
};
CurvatureReport curvature_check(const PotentialSpec& spec, const ContrastSpec& contrast,
                                double eta, const std::vector<Vec>& grid_x,
                                const std::vector<Vec>& grid_xp, const Vec& delta_grid);

// --- Aronson-type bounds -------------------------------------------------------

struct KernelBoundsFit {
    double c = 0.0, big_c = 0.0;
    bool feasible = false;
};

// Grid search over (c, C) in [1.01, 100]^2 (log-spaced, 50 x 50) for the
// smallest c, then C, such that
//   (1/c) eta^{-d/2} exp(-C|x-x'|^2/eta) exp(-C eta |x|^2) <= p*(x,x')
//   p*(x,x') <= c eta^{-d/2} exp(-(1/C)|x-x'|^2/eta) exp(C eta |x|^2)
// hold at every grid point of the box. The C range can be pinned to probe
// deliberately infeasible clamps.
KernelBoundsFit kernel_bounds_fit(const PotentialSpec& spec, double eta, double box_radius,
                                  int grid_per_axis = 81, int c_grid = 50, int big_c_grid = 50,
                                  double big_c_min = 1.01, double big_c_max = 100.0);

}  // namespace nck
