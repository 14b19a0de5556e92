#include "nck/diffusion.hpp"

#include <cmath>

#include "nck/errors.hpp"

namespace nck {

namespace {

void require_finite(const Vec& x) {
    for (double v : x)
        if (!std::isfinite(v)) throw invalid_input("non-finite input vector");
}

double norm2(const Vec& x) {
    double s = 0.0;
    for (double v : x) s += v * v;
    return std::sqrt(s);
}

}  // namespace

double stationary_density(const PotentialSpec& spec, const Vec& x) {
    require_finite(x);
    if (spec.is_ou()) {
        const int d = spec.dimension;
        double log_det = 0.0;
        for (double lam : spec.theta_eigvals) log_det += std::log(lam);
        const double log_z = 0.5 * d * std::log(2.0 * M_PI) - 0.5 * log_det;
        return std::exp(-potential_value(spec, x) - log_z);
    }
    const NamedPotential& entry = named_potential(spec.name);
    if (!entry.log_partition)
        throw unsupported_error("stationary_density: no registered normalizer for '" +
                                spec.name + "'");
    return std::exp(-potential_value(spec, x) - entry.log_partition(spec.dimension));
}

Vec sample_stationary_one(const PotentialSpec& spec, Rng& rng) {
    const int d = spec.dimension;
    if (spec.is_ou()) {
        Vec z(d);
        for (int i = 0; i < d; ++i) z[i] = rng.normal() / std::sqrt(spec.theta_eigvals[i]);
        return spec.from_eigenbasis(z);
    }
    // Euler-Maruyama with burn-in; dt and durations documented in the header.
    const double dt = 0.005 / std::max(1.0, spec.l0);
    const double burn = 10.0 / spec.rho;
    Vec x(d, 0.0);
    const int steps = static_cast<int>(burn / dt);
    const double root = std::sqrt(2.0 * dt);
    for (int k = 0; k < steps; ++k) {
        const Vec g = grad_potential(spec, x);
        for (int i = 0; i < d; ++i) x[i] += -dt * g[i] + root * rng.normal();
    }
    return x;
}

std::vector<Vec> sample_stationary(const PotentialSpec& spec, std::size_t n,
                                   std::uint64_t seed) {
    if (n < 1) throw invalid_input("sample_stationary: n must be >= 1");
    std::vector<Vec> out;
    out.reserve(n);
    Rng rng(seed);
    if (spec.is_ou()) {
        for (std::size_t k = 0; k < n; ++k) out.push_back(sample_stationary_one(spec, rng));
        return out;
    }
    // one burn-in, then decorrelate by 2/rho time units between kept samples
    const double dt = 0.005 / std::max(1.0, spec.l0);
    const double root = std::sqrt(2.0 * dt);
    const int gap_steps = static_cast<int>(2.0 / spec.rho / dt);
    Vec x = sample_stationary_one(spec, rng);
    out.push_back(x);
    const int d = spec.dimension;
    while (out.size() < n) {
        for (int k = 0; k < gap_steps; ++k) {
            const Vec g = grad_potential(spec, x);
            for (int i = 0; i < d; ++i) x[i] += -dt * g[i] + root * rng.normal();
        }
        out.push_back(x);
    }
    return out;
}

double log_transition_density_ou(const PotentialSpec& spec, double eta, const Vec& x,
                                 const Vec& xp) {
    if (!spec.is_ou())
        throw unsupported_error("transition_density_ou: requires a QuadraticOu spec");
    if (eta <= 0.0) throw invalid_input("transition_density_ou: eta must be > 0");
    require_finite(x);
    require_finite(xp);
    const int d = spec.dimension;
    const Vec z = spec.to_eigenbasis(x);
    const Vec zp = spec.to_eigenbasis(xp);
    double log_p = 0.0;
    for (int i = 0; i < d; ++i) {
        const double lam = spec.theta_eigvals[i];
        const double mean = std::exp(-lam * eta) * z[i];
        const double var = (1.0 - std::exp(-2.0 * lam * eta)) / lam;
        const double r = zp[i] - mean;
        log_p += -0.5 * r * r / var - 0.5 * std::log(2.0 * M_PI * var);
    }
    return log_p;
}

double transition_density_ou(const PotentialSpec& spec, double eta, const Vec& x,
                             const Vec& xp) {
    return std::exp(log_transition_density_ou(spec, eta, x, xp));
}

Vec ou_transition_sample(const PotentialSpec& spec, double eta, const Vec& x, Rng& rng) {
    const int d = spec.dimension;
    const Vec z = spec.to_eigenbasis(x);
    Vec zp(d);
    for (int i = 0; i < d; ++i) {
        const double lam = spec.theta_eigvals[i];
        const double mean = std::exp(-lam * eta) * z[i];
        const double sd = std::sqrt((1.0 - std::exp(-2.0 * lam * eta)) / lam);
        zp[i] = mean + sd * rng.normal();
    }
    return spec.from_eigenbasis(zp);
}

Trajectory simulate_trajectory(const PotentialSpec& spec, double eta, double total_time,
                               std::uint64_t seed, int substeps) {
    if (total_time < 2.0 * eta)
        throw invalid_config("simulate_trajectory: total_time must be >= 2 * eta");
    if (substeps < 1) throw invalid_config("simulate_trajectory: substeps must be >= 1");
    std::size_t count = static_cast<std::size_t>(std::floor(total_time / eta + 1e-9));
    if (count % 2 == 1) --count;  // keep 2m observations

    Trajectory traj;
    traj.eta = eta;
    traj.total_time = total_time;
    traj.seed = seed;
    traj.dimension = spec.dimension;
    traj.id = "traj-" + std::to_string(seed);
    traj.points.reserve(count);

    Rng rng(seed);
    Vec x = sample_stationary_one(spec, rng);
    traj.points.push_back(x);
    const int d = spec.dimension;
    if (spec.is_ou()) {
        for (std::size_t k = 1; k < count; ++k) {
            x = ou_transition_sample(spec, eta, x, rng);
            traj.points.push_back(x);
        }
    } else {
        const double dt = eta / substeps;
        const double root = std::sqrt(2.0 * dt);
        for (std::size_t k = 1; k < count; ++k) {
            for (int s = 0; s < substeps; ++s) {
                const Vec g = grad_potential(spec, x);
                for (int i = 0; i < d; ++i) x[i] += -dt * g[i] + root * rng.normal();
            }
            traj.points.push_back(x);
        }
    }
    return traj;
}

ExpectedNormB expected_norm_b(const PotentialSpec& spec, std::size_t n_mc,
                              std::uint64_t seed) {
    if (n_mc < 10000) throw invalid_input("expected_norm_b: n_mc must be >= 10^4");
    const auto samples = sample_stationary(spec, n_mc, seed);
    Vec norms(n_mc);
    for (std::size_t i = 0; i < n_mc; ++i) norms[i] = norm2(samples[i]);
    double mean = 0.0;
    for (double v : norms) mean += v;
    mean /= n_mc;
    double ss = 0.0;
    for (double v : norms) ss += (v - mean) * (v - mean);
    const double se = std::sqrt(ss / (n_mc - 1) / n_mc);

    const int d = spec.dimension;
    const Vec origin(d, 0.0);
    const double pi_star = stationary_density(spec, origin);
    const double rho = spec.rho;
    // B = E_pi |x| <= pi(x*) (2 pi / rho)^{d/2} E_{N(0, I/rho)} |x|
    //              <= pi(x*) (2 pi / rho)^{d/2} sqrt(d / rho)
    const double gauss_factor = std::pow(2.0 * M_PI / rho, 0.5 * d);
    const double bound = pi_star * gauss_factor * std::sqrt(static_cast<double>(d) / rho);
    const double no_normalizer = pi_star * std::sqrt(static_cast<double>(d) / rho);
    return {mean, se, bound, no_normalizer, mean <= bound};
}

}  // namespace nck
