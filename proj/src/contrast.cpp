#include "nck/contrast.hpp"

#include <cmath>

#include "nck/errors.hpp"

namespace nck {

namespace {

double gaussian_density(const Vec& xp, const Vec& mean, double variance) {
    const int d = static_cast<int>(xp.size());
    double s = 0.0;
    for (int i = 0; i < d; ++i) {
        const double r = xp[i] - (mean.empty() ? 0.0 : mean[i]);
        s += r * r;
    }
    return std::exp(-0.5 * s / variance - 0.5 * d * std::log(2.0 * M_PI * variance));
}

}  // namespace

double ContrastSpec::density(const Vec& xp) const {
    if (static_cast<int>(xp.size()) != dimension)
        throw invalid_input("contrast density: dimension mismatch");
    switch (kind) {
        case Kind::IsotropicGaussian:
            return gaussian_density(xp, mean, variance);
        case Kind::GaussianMixture: {
            double s = 0.0;
            for (const auto& c : components) s += c.weight * gaussian_density(xp, c.mean, c.variance);
            return s;
        }
        case Kind::MatchedOu: {
            const int d = dimension;
            // rotate into the OU eigenbasis
            Vec z(d, 0.0);
            if (d == 1) {
                z = xp;
            } else {
                for (int i = 0; i < d; ++i)
                    for (int j = 0; j < d; ++j) z[i] += ou_eigvecs[j * d + i] * xp[j];
            }
            double log_p = 0.0;
            for (int i = 0; i < d; ++i) {
                const double var = 1.0 / ou_eigvals[i];
                log_p += -0.5 * z[i] * z[i] / var - 0.5 * std::log(2.0 * M_PI * var);
            }
            return std::exp(log_p);
        }
    }
    throw invalid_input("contrast density: bad kind");
}

Vec ContrastSpec::sample(Rng& rng) const {
    const int d = dimension;
    switch (kind) {
        case Kind::IsotropicGaussian: {
            Vec x(d);
            const double sd = std::sqrt(variance);
            for (int i = 0; i < d; ++i) x[i] = (mean.empty() ? 0.0 : mean[i]) + sd * rng.normal();
            return x;
        }
        case Kind::GaussianMixture: {
            const double u = rng.uniform();
            double acc = 0.0;
            for (const auto& c : components) {
                acc += c.weight;
                if (u <= acc || &c == &components.back()) {
                    Vec x(d);
                    const double sd = std::sqrt(c.variance);
                    for (int i = 0; i < d; ++i)
                        x[i] = (c.mean.empty() ? 0.0 : c.mean[i]) + sd * rng.normal();
                    return x;
                }
            }
            throw degenerate_contrast("mixture weights do not sum to 1");
        }
        case Kind::MatchedOu: {
            Vec z(d);
            for (int i = 0; i < d; ++i) z[i] = rng.normal() / std::sqrt(ou_eigvals[i]);
            if (d == 1) return z;
            Vec x(d, 0.0);
            for (int j = 0; j < d; ++j)
                for (int i = 0; i < d; ++i) x[j] += ou_eigvecs[j * d + i] * z[i];
            return x;
        }
    }
    throw invalid_input("contrast sample: bad kind");
}

ContrastSpec ContrastSpec::isotropic(Vec mean, double variance) {
    if (variance <= 0.0) throw degenerate_contrast("isotropic contrast: variance must be > 0");
    ContrastSpec q;
    q.kind = Kind::IsotropicGaussian;
    q.dimension = static_cast<int>(mean.size());
    q.mean = std::move(mean);
    q.variance = variance;
    return q;
}

ContrastSpec ContrastSpec::mixture(std::vector<GaussianComponent> components, int dimension) {
    if (components.empty()) throw degenerate_contrast("mixture contrast: no components");
    double total = 0.0;
    for (const auto& c : components) {
        if (c.weight <= 0.0 || c.variance <= 0.0)
            throw degenerate_contrast("mixture contrast: weights and variances must be > 0");
        total += c.weight;
    }
    if (std::abs(total - 1.0) > 1e-9)
        throw degenerate_contrast("mixture contrast: weights must sum to 1");
    ContrastSpec q;
    q.kind = Kind::GaussianMixture;
    q.dimension = dimension;
    q.components = std::move(components);
    return q;
}

ContrastSpec ContrastSpec::matched_ou(const PotentialSpec& spec, double eta) {
    if (!spec.is_ou()) throw unsupported_error("matched_ou contrast: requires QuadraticOu");
    ContrastSpec q;
    q.kind = Kind::MatchedOu;
    q.dimension = spec.dimension;
    q.ou_eigvals = spec.theta_eigvals;
    q.ou_eigvecs = spec.theta_eigvecs;
    q.eta = eta;
    return q;
}

std::string ContrastSpec::describe() const {
    switch (kind) {
        case Kind::IsotropicGaussian:
            return "isotropic-gaussian(var=" + std::to_string(variance) + ")";
        case Kind::GaussianMixture:
            return "gaussian-mixture(" + std::to_string(components.size()) + " components)";
        case Kind::MatchedOu:
            return "matched-ou(eta=" + std::to_string(eta) + ")";
    }
    return "unknown";
}

}  // namespace nck
