#include "nck/potential.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <map>
#include <mutex>

#include "nck/errors.hpp"
#include "nck/quadrature.hpp"

namespace nck {

namespace {

void require_finite(const Vec& x) {
    for (double v : x)
        if (!std::isfinite(v)) throw invalid_input("non-finite input vector");
}

Eigen::MatrixXd to_eigen(const std::vector<double>& m, int d) {
    Eigen::MatrixXd out(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) out(i, j) = m[i * d + j];
    return out;
}

double norm2(const Vec& x) {
    double s = 0.0;
    for (double v : x) s += v * v;
    return std::sqrt(s);
}

double spectral_norm(const std::vector<double>& m, int d) {
    Eigen::MatrixXd e = to_eigen(m, d);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (e + e.transpose()));
    double mx = 0.0;
    for (int i = 0; i < d; ++i) mx = std::max(mx, std::abs(es.eigenvalues()[i]));
    return mx;
}

}  // namespace

PotentialSpec PotentialSpec::quadratic_ou(const std::vector<double>& theta_row_major, int d) {
    if (d < 1) throw invalid_input("quadratic_ou: dimension must be >= 1");
    if (theta_row_major.size() != static_cast<std::size_t>(d) * d)
        throw invalid_input("quadratic_ou: theta must be d x d");
    Eigen::MatrixXd theta = to_eigen(theta_row_major, d);
    if (!theta.isApprox(theta.transpose(), 1e-12))
        throw invalid_input("quadratic_ou: theta must be symmetric");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(theta);
    if (es.eigenvalues().minCoeff() <= 0.0)
        throw invalid_input("quadratic_ou: theta must be positive-definite");

    PotentialSpec spec;
    spec.kind = PotentialKind::QuadraticOu;
    spec.dimension = d;
    spec.theta = theta_row_major;
    spec.theta_eigvals.assign(d, 0.0);
    spec.theta_eigvecs.assign(static_cast<std::size_t>(d) * d, 0.0);
    for (int i = 0; i < d; ++i) {
        spec.theta_eigvals[i] = es.eigenvalues()[i];
        for (int j = 0; j < d; ++j) spec.theta_eigvecs[j * d + i] = es.eigenvectors()(j, i);
    }
    spec.rho = es.eigenvalues().minCoeff();
    spec.l0 = es.eigenvalues().maxCoeff();
    spec.l1 = 0.0;  // constant Hessian
    // |Theta x| <= l0 |x| <= max(l0, 1) (1 + |x|)
    spec.k_growth = std::max(spec.l0, 1.0);
    return spec;
}

PotentialSpec PotentialSpec::named(const std::string& id, int dimension) {
    const NamedPotential& entry = named_potential(id);
    PotentialSpec spec;
    spec.kind = PotentialKind::NamedTest;
    spec.dimension = dimension > 0 ? dimension : entry.default_dimension;
    spec.name = id;
    spec.rho = entry.rho;
    spec.l0 = entry.l0;
    spec.l1 = entry.l1;
    spec.k_growth = entry.k_growth;
    return spec;
}

Vec PotentialSpec::to_eigenbasis(const Vec& x) const {
    const int d = dimension;
    if (d == 1) return x;
    Vec z(d, 0.0);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) z[i] += theta_eigvecs[j * d + i] * x[j];  // V' x
    return z;
}

Vec PotentialSpec::from_eigenbasis(const Vec& z) const {
    const int d = dimension;
    if (d == 1) return z;
    Vec x(d, 0.0);
    for (int j = 0; j < d; ++j)
        for (int i = 0; i < d; ++i) x[j] += theta_eigvecs[j * d + i] * z[i];  // V z
    return x;
}

double potential_value(const PotentialSpec& spec, const Vec& x) {
    require_finite(x);
    if (spec.is_ou()) {
        const int d = spec.dimension;
        double s = 0.0;
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) s += x[i] * spec.theta[i * d + j] * x[j];
        return 0.5 * s;
    }
    return named_potential(spec.name).value(x);
}

Vec grad_potential(const PotentialSpec& spec, const Vec& x) {
    require_finite(x);
    if (static_cast<int>(x.size()) != spec.dimension)
        throw invalid_input("grad_potential: dimension mismatch");
    if (spec.is_ou()) {
        const int d = spec.dimension;
        Vec g(d, 0.0);
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) g[i] += spec.theta[i * d + j] * x[j];
        return g;
    }
    return named_potential(spec.name).grad(x);
}

std::vector<double> hessian(const PotentialSpec& spec, const Vec& x) {
    const int d = spec.dimension;
    if (spec.is_ou()) return spec.theta;
    const NamedPotential& entry = named_potential(spec.name);
    if (entry.hess) return entry.hess(x);
    // central differences of the gradient, step 1e-4 (1 + |x|)
    const double h = 1e-4 * (1.0 + norm2(x));
    std::vector<double> H(static_cast<std::size_t>(d) * d, 0.0);
    for (int j = 0; j < d; ++j) {
        Vec xp = x, xm = x;
        xp[j] += h;
        xm[j] -= h;
        const Vec gp = entry.grad(xp), gm = entry.grad(xm);
        for (int i = 0; i < d; ++i) H[i * d + j] = (gp[i] - gm[i]) / (2.0 * h);
    }
    // symmetrize
    for (int i = 0; i < d; ++i)
        for (int j = i + 1; j < d; ++j) {
            const double v = 0.5 * (H[i * d + j] + H[j * d + i]);
            H[i * d + j] = H[j * d + i] = v;
        }
    return H;
}

AssumptionReport check_assumptions(const PotentialSpec& spec, const std::vector<Vec>& grid) {
    if (grid.empty()) throw invalid_input("check_assumptions: empty grid");
    AssumptionReport rep;
    const int d = spec.dimension;
    const double tol = 1e-6;
    auto fail = [&](bool& flag, const Vec& x, const char* what) {
        if (rep.all_ok()) {
            rep.first_violation = x;
            rep.violated_check = what;
        }
        flag = false;
    };
    for (const Vec& x : grid) {
        const auto H = hessian(spec, x);
        Eigen::MatrixXd He(d, d);
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) He(i, j) = H[i * d + j];
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(He);
        if (es.eigenvalues().minCoeff() < spec.rho - tol) fail(rep.rho_ok, x, "rho");
        if (es.eigenvalues().maxCoeff() > spec.l0 + tol) fail(rep.l0_ok, x, "l0");
        const Vec g = grad_potential(spec, x);
        if (norm2(g) > spec.k_growth * (1.0 + norm2(x)) + tol) fail(rep.growth_ok, x, "growth");
        // Hessian Lipschitz check along each axis at a short displacement
        const double step = 1e-2;
        for (int j = 0; j < d; ++j) {
            Vec xp = x;
            xp[j] += step;
            auto Hp = hessian(spec, xp);
            std::vector<double> diff(H.size());
            for (std::size_t k = 0; k < H.size(); ++k) diff[k] = Hp[k] - H[k];
            if (spectral_norm(diff, d) > spec.l1 * step + 1e-3 * step) {
                fail(rep.l1_ok, x, "l1");
                break;
            }
        }
    }
    return rep;
}

std::vector<Vec> make_grid(double r, int per_axis, int d) {
    const Vec axis = linspace(-r, r, per_axis);
    std::vector<Vec> grid;
    std::vector<int> idx(d, 0);
    while (true) {
        Vec point(d);
        for (int k = 0; k < d; ++k) point[k] = axis[idx[k]];
        grid.push_back(point);
        int k = d - 1;
        while (k >= 0 && ++idx[k] == per_axis) idx[k--] = 0;
        if (k < 0) break;
    }
    return grid;
}

// --- registry -------------------------------------------------------------

namespace {

std::map<std::string, NamedPotential>& registry() {
    static std::map<std::string, NamedPotential> reg = [] {
        std::map<std::string, NamedPotential> r;

        // f(x) = |x|^2 / 2 : the unit OU potential as a named entry
        NamedPotential quad;
        quad.value = [](const Vec& x) {
            double s = 0.0;
            for (double v : x) s += v * v;
            return 0.5 * s;
        };
        quad.grad = [](const Vec& x) { return x; };
        quad.hess = [](const Vec& x) {
            const int d = static_cast<int>(x.size());
            std::vector<double> H(static_cast<std::size_t>(d) * d, 0.0);
            for (int i = 0; i < d; ++i) H[i * d + i] = 1.0;
            return H;
        };
        quad.rho = 1.0;
        quad.l0 = 1.0;
        quad.l1 = 0.0;
        quad.k_growth = 1.0;
        quad.log_partition = [](int d) { return 0.5 * d * std::log(2.0 * M_PI); };
        r["quadratic"] = quad;

        // f(x) = sum_i x_i^2/2 + 0.1 log cosh(x_i): strongly convex but
        // non-Gaussian; Hessian 1 + 0.1 sech^2 in [1, 1.1], |f'''| <= 0.1 * 0.77
        NamedPotential lc;
        lc.value = [](const Vec& x) {
            double s = 0.0;
            for (double v : x) {
                // log cosh without overflow
                const double av = std::abs(v);
                s += 0.5 * v * v + 0.1 * (av + std::log1p(std::exp(-2.0 * av)) - std::log(2.0));
            }
            return s;
        };
        lc.grad = [](const Vec& x) {
            Vec g(x.size());
            for (std::size_t i = 0; i < x.size(); ++i) g[i] = x[i] + 0.1 * std::tanh(x[i]);
            return g;
        };
        lc.hess = [](const Vec& x) {
            const int d = static_cast<int>(x.size());
            std::vector<double> H(static_cast<std::size_t>(d) * d, 0.0);
            for (int i = 0; i < d; ++i) {
                const double t = std::tanh(x[i]);
                H[i * d + i] = 1.0 + 0.1 * (1.0 - t * t);
            }
            return H;
        };
        lc.rho = 1.0;
        lc.l0 = 1.1;
        lc.l1 = 0.08;
        lc.k_growth = 1.1;
        lc.log_partition = [](int d) {
            static double log_z1 = [] {
                const double z = integrate(
                    [](double x) {
                        const double ax = std::abs(x);
                        const double logcosh =
                            ax + std::log1p(std::exp(-2.0 * ax)) - std::log(2.0);
                        return std::exp(-0.5 * x * x - 0.1 * logcosh);
                    },
                    -12.0, 12.0, 512);
                return std::log(z);
            }();
            return d * log_z1;
        };
        r["quadratic-plus-logcosh"] = lc;

        // f(x, y) = x^2/2 + 2 y^2 : anisotropic quadratic, Theta = diag(1, 4)
        NamedPotential aniso;
        aniso.default_dimension = 2;
        aniso.value = [](const Vec& x) { return 0.5 * x[0] * x[0] + 2.0 * x[1] * x[1]; };
        aniso.grad = [](const Vec& x) { return Vec{x[0], 4.0 * x[1]}; };
        aniso.hess = [](const Vec&) { return std::vector<double>{1.0, 0.0, 0.0, 4.0}; };
        aniso.rho = 1.0;
        aniso.l0 = 4.0;
        aniso.l1 = 0.0;
        aniso.k_growth = 4.0;
        aniso.log_partition = [](int) {
            return std::log(2.0 * M_PI) - 0.5 * std::log(4.0);  // sqrt((2pi)^2 / det)
        };
        r["anisotropic-quadratic"] = aniso;

        return r;
    }();
    return reg;
}

std::mutex& registry_mutex() {
    static std::mutex mu;
    return mu;
}

}  // namespace

const NamedPotential& named_potential(const std::string& id) {
    std::lock_guard<std::mutex> lock(registry_mutex());
    auto it = registry().find(id);
    if (it == registry().end())
        throw unsupported_error("unknown named potential: " + id);
    return it->second;
}

bool has_named_potential(const std::string& id) {
    std::lock_guard<std::mutex> lock(registry_mutex());
    return registry().count(id) > 0;
}

void register_named_potential(const std::string& id, NamedPotential entry) {
    std::lock_guard<std::mutex> lock(registry_mutex());
    registry()[id] = std::move(entry);
}

}  // namespace nck
