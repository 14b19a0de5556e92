#pragma once

#include <functional>
#include <span>
#include <vector>

#include "nck/parallel.hpp"

namespace nck {

using Vec = std::vector<double>;

// Gauss-Legendre rule on [-1, 1]; nodes/weights via Newton iteration on the
// Legendre recurrence. Rules are cached per node count.
struct GaussLegendre {
    Vec nodes;
    Vec weights;
    static const GaussLegendre& get(int n);
};

// Single-panel Gauss-Legendre integral of f over [a, b], pairwise-summed.
template <class F>
double integrate(F&& f, double a, double b, int n) {
    const auto& rule = GaussLegendre::get(n);
    const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    std::vector<double> terms(rule.nodes.size());
    for (std::size_t i = 0; i < terms.size(); ++i)
        terms[i] = rule.weights[i] * f(mid + half * rule.nodes[i]);
    return half * par::pairwise_sum(terms);
}

// Piecewise integral with interior cut points (for integrands with kinks,
// e.g. |p - q|); cuts must lie inside (a, b) and be sorted.
double integrate_split(const std::function<double(double)>& f, double a, double b, int n,
                       const Vec& cuts);

// Locate sign changes of g on [a, b] by scanning `scan` cells and bisecting
// each bracket to ~1e-13. Used to cut |p - q| integrals at crossings.
Vec find_sign_changes(const std::function<double(double)>& g, double a, double b, int scan);

Vec linspace(double a, double b, int count);

}  // namespace nck
