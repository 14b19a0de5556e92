#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "nck/rng.hpp"

namespace nck {

enum class PotentialKind { QuadraticOu, NamedTest };

// The potential f of the diffusion dx = -grad f dt + sqrt(2) dW, with its
// regularity constants. For QuadraticOu, f(x) = x' Theta x / 2 with Theta
// symmetric positive-definite, rho = lambda_min(Theta), l0 = lambda_max.
// Minimizer is the origin by convention.
struct PotentialSpec {
    PotentialKind kind;
    int dimension = 1;
    std::string name;              // NamedTest identifier
    std::vector<double> theta;     // row-major d x d (QuadraticOu)
    double rho = 1.0;
    double l0 = 1.0;
    double l1 = 0.0;
    double k_growth = 1.0;

    // cached eigendecomposition of theta (QuadraticOu): theta = V diag(lam) V'
    Vec theta_eigvals;
    std::vector<double> theta_eigvecs;  // row-major d x d, columns = eigenvectors

    static PotentialSpec quadratic_ou(const std::vector<double>& theta_row_major, int d);
    static PotentialSpec quadratic_ou_1d(double theta) { return quadratic_ou({theta}, 1); }
    static PotentialSpec named(const std::string& id, int dimension);

    bool is_ou() const { return kind == PotentialKind::QuadraticOu; }

    // coordinates in the eigenbasis and back (identity transforms for d==1)
    Vec to_eigenbasis(const Vec& x) const;
    Vec from_eigenbasis(const Vec& z) const;
};

double potential_value(const PotentialSpec& spec, const Vec& x);
Vec grad_potential(const PotentialSpec& spec, const Vec& x);

// Hessian at x, row-major d x d. Exact for QuadraticOu and analytic named
// entries; central differences with step 1e-4 * (1 + |x|) otherwise.
std::vector<double> hessian(const PotentialSpec& spec, const Vec& x);

struct AssumptionReport {
    bool rho_ok = true;
    bool l0_ok = true;
    bool l1_ok = true;
    bool growth_ok = true;
    std::optional<Vec> first_violation;
    std::string violated_check;
    bool all_ok() const { return rho_ok && l0_ok && l1_ok && growth_ok; }
};

// Verifies rho <= eig(Hessian) <= l0, the Hessian's Lipschitz constant
// against l1 (finite differences between nearby points), and
// |grad f| <= k_growth (1 + |x|) on every grid point.
AssumptionReport check_assumptions(const PotentialSpec& spec, const std::vector<Vec>& grid);

// Tensor grid on [-r, r]^d with per_axis points per axis.
std::vector<Vec> make_grid(double r, int per_axis, int d);

// --- NamedTest registry -------------------------------------------------

struct NamedPotential {
    int default_dimension = 1;
    std::function<double(const Vec&)> value;
    std::function<Vec(const Vec&)> grad;
    std::function<std::vector<double>(const Vec&)> hess;  // optional analytic Hessian
    double rho, l0, l1, k_growth;
    // log partition function log Z = log integral exp(-f); empty means the
    // stationary density is unavailable for this entry
    std::function<double(int d)> log_partition;
};

const NamedPotential& named_potential(const std::string& id);
bool has_named_potential(const std::string& id);
void register_named_potential(const std::string& id, NamedPotential entry);

}  // namespace nck
