#include "nck/quadrature.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>

namespace nck {

namespace {

GaussLegendre build_rule(int n) {
    GaussLegendre rule;
    rule.nodes.assign(n, 0.0);
    rule.weights.assign(n, 0.0);
    const int m = (n + 1) / 2;
    for (int i = 0; i < m; ++i) {
        double z = std::cos(M_PI * (i + 0.75) / (n + 0.5));
        double pp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p1 = 1.0, p2 = 0.0;
            for (int j = 0; j < n; ++j) {
                const double p3 = p2;
                p2 = p1;
                p1 = ((2 * j + 1) * z * p2 - j * p3) / (j + 1);
            }
            pp = n * (z * p1 - p2) / (z * z - 1.0);
            const double z1 = z;
            z = z1 - p1 / pp;
            if (std::abs(z - z1) < 1e-15) break;
        }
        rule.nodes[i] = -z;
        rule.nodes[n - 1 - i] = z;
        rule.weights[i] = 2.0 / ((1.0 - z * z) * pp * pp);
        rule.weights[n - 1 - i] = rule.weights[i];
    }
    return rule;
}

}  // namespace

const GaussLegendre& GaussLegendre::get(int n) {
    if (n < 1) throw std::invalid_argument("GaussLegendre: n must be >= 1");
    static std::map<int, GaussLegendre> cache;
    static std::mutex mu;
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(n);
    if (it == cache.end()) it = cache.emplace(n, build_rule(n)).first;
    return it->second;
}

double integrate_split(const std::function<double(double)>& f, double a, double b, int n,
                       const Vec& cuts) {
    double total = 0.0;
    double lo = a;
    for (double c : cuts) {
        if (c <= lo || c >= b) continue;
        total += integrate(f, lo, c, n);
        lo = c;
    }
    total += integrate(f, lo, b, n);
    return total;
}

Vec find_sign_changes(const std::function<double(double)>& g, double a, double b, int scan) {
    Vec roots;
    const double h = (b - a) / scan;
    double prev_x = a, prev_v = g(a);
    for (int i = 1; i <= scan; ++i) {
        const double x = a + i * h;
        const double v = g(x);
        if ((prev_v < 0.0 && v > 0.0) || (prev_v > 0.0 && v < 0.0)) {
            double lo = prev_x, hi = x, flo = prev_v;
            for (int it = 0; it < 60; ++it) {
                const double mid = 0.5 * (lo + hi);
                const double fm = g(mid);
                if ((flo < 0.0) == (fm < 0.0)) {
                    lo = mid;
                    flo = fm;
                } else {
                    hi = mid;
                }
            }
            roots.push_back(0.5 * (lo + hi));
        } else if (prev_v != 0.0 && v == 0.0) {
            roots.push_back(x);
        }
        prev_x = x;
        prev_v = v;
    }
    return roots;
}

Vec linspace(double a, double b, int count) {
    if (count < 1) throw std::invalid_argument("linspace: count must be >= 1");
    Vec out(count);
    if (count == 1) {
        out[0] = a;
        return out;
    }
    const double step = (b - a) / (count - 1);
    for (int i = 0; i < count; ++i) out[i] = a + step * i;
    out.back() = b;
    return out;
}

}  // namespace nck
