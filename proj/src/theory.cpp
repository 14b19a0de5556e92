#include "nck/theory.hpp"

#include <cfloat>
#include <cmath>
#include <limits>

#include "nck/errors.hpp"
#include "nck/parallel.hpp"
#include "nck/quadrature.hpp"
#include "nck/stats.hpp"

namespace nck {

namespace {

void require_d1(const PotentialSpec& spec, const char* what) {
    if (spec.dimension != 1)
        throw unsupported_error(std::string(what) + ": quadrature mode requires d = 1; use MC");
}

double kernel_sd(const PotentialSpec& spec, double eta) {
    // widest eigendirection
    double v = 0.0;
    for (double lam : spec.theta_eigvals)
        v = std::max(v, (1.0 - std::exp(-2.0 * lam * eta)) / lam);
    return std::sqrt(v);
}

// E_{x ~ pi(box)} integral over x' of f(x, x', p*(x,x')) dx', with x' on the
// widened box. Outer x loop is parallel; each inner integral and the final
// combine are fixed-order pairwise sums.
template <class F>
double expect_xy(const PotentialSpec& spec, double eta, const TheoryQuad& quad, F&& f) {
    require_d1(spec, "expect_xy");
    const auto& rule = GaussLegendre::get(quad.nodes);
    const double r = quad.box_radius;
    const double rp = r + quad.xp_margin_sds * kernel_sd(spec, eta);
    std::vector<double> outer(rule.nodes.size());
    par::for_each_index(rule.nodes.size(), [&](std::size_t i) {
        const double x = r * rule.nodes[i];
        const Vec xv{x};
        const double pix = stationary_density(spec, xv);
        std::vector<double> inner(rule.nodes.size());
        for (std::size_t j = 0; j < rule.nodes.size(); ++j) {
            const double xp = rp * rule.nodes[j];
            const Vec xpv{xp};
            const double pstar = transition_density_ou(spec, eta, xv, xpv);
            inner[j] = rp * rule.weights[j] * f(xv, xpv, pstar);
        }
        outer[i] = r * rule.weights[i] * pix * par::pairwise_sum(inner);
    });
    return par::pairwise_sum(outer);
}

constexpr double kPassSlack = 1e-9;  // absorbs quadrature zero at p = p*

double softplus_log1p_exp(double log_c) {
    // log(1 + c) given log c, stable for huge c
    if (log_c > 40.0) return log_c;
    return std::log1p(std::exp(log_c));
}

}  // namespace

// --- risks -------------------------------------------------------------------

double epsilon_star_quad(const PotentialSpec& spec, const ContrastSpec& contrast, double eta,
                         const TheoryQuad& quad) {
    return expect_xy(spec, eta, quad, [&](const Vec&, const Vec& xp, double pstar) {
        const double q = contrast.density(xp);
        const double mix = 0.5 * (pstar + q);
        const double pb = pstar / (pstar + q);
        return mix * pb * (1.0 - pb);
    });
}

McEstimate epsilon_star_mc(const PotentialSpec& spec, const ContrastSpec& contrast, double eta,
                           std::size_t n_mc, std::uint64_t seed) {
    const auto samples = make_pair_samples(spec, contrast, eta, n_mc, seed);
    const MeanSe ms = epsilon_star_on(samples);
    return {ms.mean, ms.se};
}

double population_risk_quad(const PairEvaluator& h, const PotentialSpec& spec,
                            const ContrastSpec& contrast, double eta, const TheoryQuad& quad) {
    return expect_xy(spec, eta, quad, [&](const Vec& x, const Vec& xp, double pstar) {
        const double q = contrast.density(xp);
        const double mix = 0.5 * (pstar + q);
        const double pb = pstar / (pstar + q);
        const double hv = h(x, xp);
        return mix * (pb * (1.0 - pb) + (hv - pb) * (hv - pb));
    });
}

McEstimate population_risk_mc(const PairEvaluator& h, const PotentialSpec& spec,
                              const ContrastSpec& contrast, double eta, std::size_t n_mc,
                              std::uint64_t seed) {
    const auto samples = make_pair_samples(spec, contrast, eta, n_mc, seed);
    const MeanSe ms = population_risk_on(h, samples);
    return {ms.mean, ms.se};
}

double excess_risk_quad(const PairEvaluator& h, const PotentialSpec& spec,
                        const ContrastSpec& contrast, double eta, const TheoryQuad& quad) {
    return expect_xy(spec, eta, quad, [&](const Vec& x, const Vec& xp, double pstar) {
        const double q = contrast.density(xp);
        const double mix = 0.5 * (pstar + q);
        const double pb = pstar / (pstar + q);
        const double hv = h(x, xp);
        return mix * (hv - pb) * (hv - pb);
    });
}

std::vector<PairSample> make_pair_samples(const PotentialSpec& spec,
                                          const ContrastSpec& contrast, double eta,
                                          std::size_t n, std::uint64_t seed) {
    std::vector<PairSample> samples(n);
    Rng rng(seed);
    for (std::size_t i = 0; i < n; ++i) {
        PairSample& s = samples[i];
        s.x = sample_stationary_one(spec, rng);
        if (rng.coin()) {
            s.x_prime = ou_transition_sample(spec, eta, s.x, rng);
        } else {
            s.x_prime = contrast.sample(rng);
        }
        s.p_star = transition_density_ou(spec, eta, s.x, s.x_prime);
        s.q = contrast.density(s.x_prime);
        s.bayes = s.p_star / (s.p_star + s.q);
    }
    return samples;
}

MeanSe population_risk_on(const PairEvaluator& h, std::span<const PairSample> samples) {
    Vec vals = par::materialize(samples.size(), [&](std::size_t i) {
        const PairSample& s = samples[i];
        const double hv = h(s.x, s.x_prime);
        return s.bayes * (1.0 - s.bayes) + (hv - s.bayes) * (hv - s.bayes);
    });
    return mean_se(vals);
}

MeanSe epsilon_star_on(std::span<const PairSample> samples) {
    Vec vals = par::materialize(samples.size(), [&](std::size_t i) {
        const PairSample& s = samples[i];
        return s.bayes * (1.0 - s.bayes);
    });
    return mean_se(vals);
}

MeanSe excess_risk_on(const PairEvaluator& h, std::span<const PairSample> samples) {
    Vec vals = par::materialize(samples.size(), [&](std::size_t i) {
        const PairSample& s = samples[i];
        const double hv = h(s.x, s.x_prime);
        return (hv - s.bayes) * (hv - s.bayes);
    });
    return mean_se(vals);
}

// --- perturbed kernels ---------------------------------------------------------

namespace {

double delta_shape(const DeltaSpec& d, double z) {
    switch (d.kind) {
        case DeltaKind::SmoothBump:
            return d.amplitude * (std::exp(-0.5 * (z - d.center) * (z - d.center) /
                                           (d.width * d.width)) -
                                  std::exp(-0.5 * (z + d.center) * (z + d.center) /
                                           (d.width * d.width)));
        case DeltaKind::ConstantOnBand:
            if (std::abs(z - d.center) <= d.width) return d.amplitude;
            if (std::abs(z + d.center) <= d.width) return -d.amplitude;
            return 0.0;
    }
    return 0.0;
}

}  // namespace

double PerturbedKernel::delta_at(const Vec& x, const Vec& x_prime) const {
    const double lam = spec.theta_eigvals[0];
    const double mean = std::exp(-lam * eta) * x[0];
    const double sd = std::sqrt((1.0 - std::exp(-2.0 * lam * eta)) / lam);
    return delta_shape(delta, (x_prime[0] - mean) / sd);
}

double PerturbedKernel::operator()(const Vec& x, const Vec& x_prime) const {
    return transition_density_ou(spec, eta, x, x_prime) * (1.0 + delta_at(x, x_prime));
}

KernelFn PerturbedKernel::fn() const {
    PerturbedKernel copy = *this;
    return [copy](const Vec& x, const Vec& xp) { return copy(x, xp); };
}

PerturbedKernel make_perturbed_kernel(const PotentialSpec& spec, double eta,
                                      const DeltaSpec& delta, double target_delta_max,
                                      bool theorem_kl_gate, double box_radius,
                                      int grid_per_axis) {
    if (!spec.is_ou() || spec.dimension != 1)
        throw unsupported_error("make_perturbed_kernel: requires QuadraticOu, d = 1");
    if (delta.amplitude < 0.0 || delta.amplitude >= 1.0)
        throw construction_error("make_perturbed_kernel: amplitude must be in [0, 1)");
    if (delta.kind == DeltaKind::ConstantOnBand && delta.center < delta.width)
        throw construction_error("make_perturbed_kernel: bands overlap; center must be >= width");
    if (theorem_kl_gate && target_delta_max > 7.0 / 6.0 + 1e-12)
        throw construction_error(
            "make_perturbed_kernel: theorem-kl experiments need target_delta_max <= 7/6");
    if (1.0 + delta.amplitude > target_delta_max + 1e-12)
        throw construction_error(
            "make_perturbed_kernel: amplitude pushes delta_max past target_delta_max");

    PerturbedKernel k;
    k.spec = spec;
    k.eta = eta;
    k.delta = delta;
    // measure delta extremes on the box grid
    const Vec axis = linspace(-box_radius, box_radius, grid_per_axis);
    double lo = 1e300, hi = -1e300;
    for (double x : axis)
        for (double xp : axis) {
            const double v = 1.0 + k.delta_at(Vec{x}, Vec{xp});
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    k.delta_min = lo;
    k.delta_max = hi;
    if (theorem_kl_gate && k.delta_max > 7.0 / 6.0 + 1e-12)
        throw construction_error("make_perturbed_kernel: measured delta_max violates 7/6 gate");
    return k;
}

// --- divergences ---------------------------------------------------------------

double kl_to_truth(const KernelFn& p, const PotentialSpec& spec, double eta,
                   const TheoryQuad& quad) {
    return expect_xy(spec, eta, quad, [&](const Vec& x, const Vec& xp, double pstar) {
        if (pstar <= 1e-300) return 0.0;
        const double pv = p(x, xp);
        if (pv <= 0.0) {
            if (pstar > 1e-12)
                throw support_violation("kl_to_truth: estimate vanishes where p* > 1e-12");
            return 0.0;
        }
        return pstar * (std::log(pstar) - std::log(pv));
    });
}

McEstimate kl_to_truth_mc(const KernelFn& p, const PotentialSpec& spec, double eta,
                          std::size_t n_mc, std::uint64_t seed) {
    Rng rng(seed);
    Vec vals(n_mc);
    for (std::size_t i = 0; i < n_mc; ++i) {
        const Vec x = sample_stationary_one(spec, rng);
        const Vec xp = ou_transition_sample(spec, eta, x, rng);
        const double pstar = transition_density_ou(spec, eta, x, xp);
        const double pv = p(x, xp);
        if (pv <= 0.0) throw support_violation("kl_to_truth_mc: estimate vanished on a draw");
        vals[i] = std::log(pstar) - std::log(pv);
    }
    const MeanSe ms = mean_se(vals);
    return {ms.mean, ms.se};
}

double l1_to_truth(const KernelFn& p, const PotentialSpec& spec, double eta,
                   const TheoryQuad& quad) {
    return expect_xy(spec, eta, quad, [&](const Vec& x, const Vec& xp, double pstar) {
        return pstar * std::abs(p(x, xp) - pstar);
    });
}

McEstimate l1_to_truth_mc(const KernelFn& p, const PotentialSpec& spec, double eta,
                          std::size_t n_mc, std::uint64_t seed) {
    Rng rng(seed);
    Vec vals(n_mc);
    for (std::size_t i = 0; i < n_mc; ++i) {
        const Vec x = sample_stationary_one(spec, rng);
        const Vec xp = ou_transition_sample(spec, eta, x, rng);
        const double pstar = transition_density_ou(spec, eta, x, xp);
        vals[i] = std::abs(p(x, xp) - pstar);
    }
    const MeanSe ms = mean_se(vals);
    return {ms.mean, ms.se};
}

double t2_term(const KernelFn& p, const PotentialSpec& spec, const ContrastSpec& contrast,
               double eta, const TheoryQuad& quad) {
    return expect_xy(spec, eta, quad, [&](const Vec& x, const Vec& xp, double pstar) {
        const double q = contrast.density(xp);
        const double m = std::max(p(x, xp), pstar) + q;
        const double m2 = m * m;
        return pstar * m2 * m2 / (q * q);
    });
}

// --- theorem checks ---------------------------------------------------------

DeltaRange delta_min_max(const KernelFn& p, const PotentialSpec& spec, double eta,
                         const std::vector<Vec>& grid_x, const std::vector<Vec>& grid_xp) {
    DeltaRange r;
    r.delta_min = 1e300;
    r.delta_max = -1e300;
    for (const Vec& x : grid_x)
        for (const Vec& xp : grid_xp) {
            const double pstar = transition_density_ou(spec, eta, x, xp);
            if (pstar <= 1e-300) continue;
            const double ratio = p(x, xp) / pstar;
            if (ratio < r.delta_min) {
                r.delta_min = ratio;
                r.argmin_x = x;
                r.argmin_xp = xp;
            }
            if (ratio > r.delta_max) {
                r.delta_max = ratio;
                r.argmax_x = x;
                r.argmax_xp = xp;
            }
        }
    r.ordering_ok =
        r.delta_min > 0.0 && r.delta_min <= 1.0 + 1e-9 && r.delta_max >= 1.0 - 1e-9;
    return r;
}

TheoremReport theorem_kl_check(const KernelFn& p, double measured_delta_min,
                               double measured_delta_max, const PotentialSpec& spec,
                               const ContrastSpec& contrast, double eta,
                               const TheoryQuad& quad, const CqResult& cq) {
    TheoremReport rep;
    rep.theorem = "kl";
    rep.inputs.eta = eta;
    rep.inputs.d = spec.dimension;
    rep.inputs.rho = spec.rho;
    rep.inputs.c_q = cq.c_q;
    rep.inputs.log_c_q = cq.log_c_q;
    rep.inputs.delta_min = measured_delta_min;
    rep.inputs.delta_max = measured_delta_max;
    rep.inputs.eps_star = epsilon_star_quad(spec, contrast, eta, quad);

    PairEvaluator induced = [&p, &contrast](const Vec& x, const Vec& xp) {
        const double pv = p(x, xp);
        return pv / (pv + contrast.density(xp));
    };
    rep.inputs.eps_tr = excess_risk_quad(induced, spec, contrast, eta, quad);
    rep.lhs = kl_to_truth(p, spec, eta, quad);

    if (rep.inputs.eps_tr <= 0.0) {
        rep.rhs = 0.0;
        rep.rhs_log10 = std::numeric_limits<double>::lowest();
    } else {
        const double log_rhs = std::log(2.0) + 5.0 * softplus_log1p_exp(cq.log_c_q) +
                               std::log(rep.inputs.eps_tr) -
                               2.0 * std::log(measured_delta_min);
        rep.rhs_log10 = log_rhs / std::log(10.0);
        rep.rhs_overflow = log_rhs > std::log(DBL_MAX);
        rep.rhs = rep.rhs_overflow ? DBL_MAX : std::exp(log_rhs);
    }
    rep.hypothesis_satisfied =
        measured_delta_max <= 7.0 / 6.0 + 1e-9 && std::isfinite(cq.log_c_q);
    rep.pass = rep.lhs <= rep.rhs + kPassSlack;
    rep.method_notes = "quadrature nodes=" + std::to_string(quad.nodes) +
                       " box=" + std::to_string(quad.box_radius) +
                       "; eps_tr = population excess of the induced classifier; pass slack 1e-9";
    return rep;
}

TheoremReport theorem_orig_check(const KernelFn& p, const PotentialSpec& spec,
                                 const ContrastSpec& contrast, double eta,
                                 const TheoryQuad& quad) {
    TheoremReport rep;
    rep.theorem = "orig";
    rep.inputs.eta = eta;
    rep.inputs.d = spec.dimension;
    rep.inputs.rho = spec.rho;
    rep.inputs.eps_star = epsilon_star_quad(spec, contrast, eta, quad);

    PairEvaluator induced = [&p, &contrast](const Vec& x, const Vec& xp) {
        const double pv = p(x, xp);
        return pv / (pv + contrast.density(xp));
    };
    rep.inputs.eps_tr = excess_risk_quad(induced, spec, contrast, eta, quad);
    rep.lhs = l1_to_truth(p, spec, eta, quad);

    const double t2 = t2_term(p, spec, contrast, eta, quad);
    const double bound_b = std::sqrt(2.0 * rep.inputs.eps_tr) * std::sqrt(t2);
    const double pi_star = stationary_density(spec, Vec(spec.dimension, 0.0));
    const double proxy_c = std::sqrt(2.0 * rep.inputs.eps_tr) * std::sqrt(pi_star) *
                           std::pow(1.0 / (spec.rho * eta * eta), 0.25 * spec.dimension);
    rep.rhs = bound_b;
    rep.rhs_log10 = std::log10(bound_b);
    rep.pass = rep.lhs <= bound_b + kPassSlack;
    rep.extra["t2"] = t2;
    rep.extra["bound_b"] = bound_b;
    rep.extra["proxy_c"] = proxy_c;
    rep.extra["ratio_b_over_c2"] = bound_b / (proxy_c * proxy_c);
    rep.method_notes = "pass tests lhs <= sqrt(2 eps_tr T2); proxy_c is slope-only";
    return rep;
}

// --- curvature ---------------------------------------------------------------

double curvature_r(double p_star, double q, double delta) {
    const double num = p_star * q * delta;
    const double den = (p_star * (1.0 + delta) + q) * (p_star + q);
    const double v = num / den;
    return v * v;
}

double curvature_rpp_fd(double p_star, double q, double delta, double step) {
    return (curvature_r(p_star, q, delta + step) - 2.0 * curvature_r(p_star, q, delta) +
            curvature_r(p_star, q, delta - step)) /
           (step * step);
}

double curvature_rpp_analytic(double p_star, double q, double delta) {
    // r(d) = c d^2 / (a + b d)^2 with c = (p q/(p+q))^2, a = p+q, b = p
    // => r'' = 2 c a (a - 2 b d) / (a + b d)^4
    const double c = (p_star * q / (p_star + q)) * (p_star * q / (p_star + q));
    const double a = p_star + q;
    const double b = p_star;
    const double abd = a + b * delta;
    return 2.0 * c * a * (a - 2.0 * b * delta) / (abd * abd * abd * abd);
}

CurvatureReport curvature_check(const PotentialSpec& spec, const ContrastSpec& contrast,
                                double eta, const std::vector<Vec>& grid_x,
                                const std::vector<Vec>& grid_xp, const Vec& delta_grid) {
    CurvatureReport rep;
    double min_rpp = 1e300;
    double log_cq = 0.0;
    for (const Vec& x : grid_x)
        for (const Vec& xp : grid_xp) {
            const double log_p = log_transition_density_ou(spec, eta, x, xp);
            const double q = contrast.density(xp);
            const double log_ratio = log_p - std::log(q);
            log_cq = std::max(log_cq, std::abs(log_ratio));
            const double pstar = std::exp(log_p);
            for (double d : delta_grid)
                min_rpp = std::min(min_rpp, curvature_rpp_fd(pstar, q, d));
        }
    rep.min_rpp = min_rpp;
    rep.log_cq_on_grid = log_cq;
    rep.cq_on_grid = std::exp(std::min(log_cq, std::log(DBL_MAX)));
    const double log_floor = std::log(2.0) - 5.0 * softplus_log1p_exp(log_cq);
    rep.floor = std::exp(log_floor);  // underflows to 0 for huge c_q, which is honest
    rep.pass = rep.min_rpp >= rep.floor - 1e-6;
    return rep;
}

// --- Aronson-type bounds --------------------------------------------------------

KernelBoundsFit kernel_bounds_fit(const PotentialSpec& spec, double eta, double box_radius,
                                  int grid_per_axis, int c_grid, int big_c_grid,
                                  double big_c_min, double big_c_max) {
    if (!spec.is_ou()) throw unsupported_error("kernel_bounds_fit: requires QuadraticOu");
    const int d = spec.dimension;
    const auto grid = make_grid(box_radius, grid_per_axis, d);

    // precompute log p*, |x - x'|^2, |x|^2 over the grid product
    const std::size_t n = grid.size();
    std::vector<double> log_p(n * n), dist2(n * n), x2(n);
    for (std::size_t i = 0; i < n; ++i) {
        double s = 0.0;
        for (double v : grid[i]) s += v * v;
        x2[i] = s;
    }
    par::for_each_index(n, [&](std::size_t i) {
        for (std::size_t j = 0; j < n; ++j) {
            log_p[i * n + j] = log_transition_density_ou(spec, eta, grid[i], grid[j]);
            double s = 0.0;
            for (int k = 0; k < d; ++k) {
                const double r = grid[i][k] - grid[j][k];
                s += r * r;
            }
            dist2[i * n + j] = s;
        }
    });

    const double log_eta_term = -0.5 * d * std::log(eta);
    auto feasible_at = [&](double c, double big_c) {
        const double log_c = std::log(c);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) {
                const double lp = log_p[i * n + j];
                const double lower = -log_c + log_eta_term - big_c * dist2[i * n + j] / eta -
                                     big_c * eta * x2[i];
                if (lp < lower) return false;
                const double upper = log_c + log_eta_term -
                                     dist2[i * n + j] / (big_c * eta) + big_c * eta * x2[i];
                if (lp > upper) return false;
            }
        return true;
    };

    // log-spaced grids; feasibility is monotone in both c and C, so the first
    // hit in (c ascending, C ascending) order is the reported fit
    auto log_grid = [](int count, double lo_v, double hi_v) {
        Vec g(count);
        if (count == 1) {
            g[0] = lo_v;
            return g;
        }
        const double lo = std::log(lo_v), hi = std::log(hi_v);
        for (int i = 0; i < count; ++i)
            g[i] = std::exp(lo + (hi - lo) * i / (count - 1));
        return g;
    };
    const Vec cs = log_grid(c_grid, 1.01, 100.0);
    const Vec bigs = log_grid(big_c_grid, big_c_min, big_c_max);

    KernelBoundsFit fit;
    for (double c : cs) {
        for (double big_c : bigs) {
            if (feasible_at(c, big_c)) {
                fit.c = c;
                fit.big_c = big_c;
                fit.feasible = true;
                return fit;
            }
        }
    }
    return fit;
}

}  // namespace nck
