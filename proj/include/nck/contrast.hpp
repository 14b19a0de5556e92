#pragma once

#include <string>
#include <vector>

#include "nck/potential.hpp"
#include "nck/rng.hpp"

namespace nck {

struct GaussianComponent {
    double weight;
    Vec mean;
    double variance;  // isotropic
};

// The contrast proposal q: evaluable density + sampler over x'.
struct ContrastSpec {
    enum class Kind { IsotropicGaussian, GaussianMixture, MatchedOu };

    Kind kind = Kind::IsotropicGaussian;
    int dimension = 1;

    // IsotropicGaussian
    Vec mean;
    double variance = 1.0;

    // GaussianMixture
    std::vector<GaussianComponent> components;

    // MatchedOu: the stationary law N(0, Theta^{-1}) of the OU process, i.e.
    // the x-averaged marginal of its eta-kernel (eta kept for the record).
    Vec ou_eigvals;
    std::vector<double> ou_eigvecs;
    double eta = 0.0;

    double density(const Vec& xp) const;
    Vec sample(Rng& rng) const;

    static ContrastSpec isotropic(Vec mean, double variance);
    static ContrastSpec mixture(std::vector<GaussianComponent> components, int dimension);
    static ContrastSpec matched_ou(const PotentialSpec& spec, double eta);

    std::string describe() const;
};

}  // namespace nck
