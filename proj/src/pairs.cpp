#include "nck/pairs.hpp"

#include <cmath>

#include "nck/errors.hpp"
#include "nck/parallel.hpp"

namespace nck {

PairDataset build_pairs(const Trajectory& traj, const ContrastSpec& contrast,
                        std::uint64_t seed) {
    if (traj.points.size() < 2)
        throw invalid_input("build_pairs: trajectory needs at least 2 points");
    const std::size_t m = traj.points.size() / 2;  // odd trailing point dropped
    PairDataset ds;
    ds.eta = traj.eta;
    ds.seed = seed;
    ds.dimension = traj.dimension;
    ds.source_trajectory_id = traj.id;
    ds.pairs.reserve(m);
    Rng rng(seed);
    for (std::size_t i = 0; i < m; ++i) {
        LabeledPair p;
        p.x = traj.points[2 * i];
        if (rng.coin()) {
            p.label = 1;
            p.x_prime = traj.points[2 * i + 1];
        } else {
            p.label = 0;
            p.x_prime = contrast.sample(rng);
        }
        ds.pairs.push_back(std::move(p));
    }
    return ds;
}

CqResult compute_cq(const PotentialSpec& spec, const ContrastSpec& contrast, double eta,
                    const std::vector<Vec>& grid_x, const std::vector<Vec>& grid_xp) {
    if (!spec.is_ou()) throw unsupported_error("compute_cq: requires QuadraticOu spec");
    if (grid_x.empty() || grid_xp.empty()) throw invalid_input("compute_cq: empty grid");

    // evaluate q once per x'
    Vec q_vals(grid_xp.size());
    for (std::size_t j = 0; j < grid_xp.size(); ++j) {
        q_vals[j] = contrast.density(grid_xp[j]);
        if (!(q_vals[j] > 0.0) || q_vals[j] < 1e-300)
            throw degenerate_contrast("compute_cq: contrast density vanishes on the grid");
    }

    const std::size_t nx = grid_x.size(), np = grid_xp.size();
    // per-x row extremes of log(p*/q), reduced deterministically afterwards
    std::vector<double> row_max(nx), row_min(nx);
    std::vector<std::size_t> row_argmax(nx), row_argmin(nx);
    par::for_each_index(nx, [&](std::size_t i) {
        double mx = -1e308, mn = 1e308;
        std::size_t amx = 0, amn = 0;
        for (std::size_t j = 0; j < np; ++j) {
            const double log_ratio =
                log_transition_density_ou(spec, eta, grid_x[i], grid_xp[j]) -
                std::log(q_vals[j]);
            if (log_ratio > mx) { mx = log_ratio; amx = j; }
            if (log_ratio < mn) { mn = log_ratio; amn = j; }
        }
        row_max[i] = mx;
        row_min[i] = mn;
        row_argmax[i] = amx;
        row_argmin[i] = amn;
    });
    std::size_t imax = 0, imin = 0;
    for (std::size_t i = 1; i < nx; ++i) {
        if (row_max[i] > row_max[imax]) imax = i;
        if (row_min[i] < row_min[imin]) imin = i;
    }
    CqResult r;
    r.max_ratio = std::exp(row_max[imax]);
    r.min_ratio = std::exp(row_min[imin]);
    r.log_c_q = std::max(row_max[imax], -row_min[imin]);
    r.c_q = std::exp(r.log_c_q);
    r.argmax_x = grid_x[imax];
    r.argmax_xp = grid_xp[row_argmax[imax]];
    r.argmin_x = grid_x[imin];
    r.argmin_xp = grid_xp[row_argmin[imin]];
    return r;
}

CqResult compute_cq_box(const PotentialSpec& spec, const ContrastSpec& contrast, double eta,
                        double box_radius, int per_axis) {
    const auto grid = make_grid(box_radius, per_axis, spec.dimension);
    return compute_cq(spec, contrast, eta, grid, grid);
}

}  // namespace nck
