#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "nck/contrast.hpp"
#include "nck/diffusion.hpp"

namespace nck {

struct LabeledPair {
    Vec x;
    Vec x_prime;
    int label;  // 1 = next observation, 0 = contrast draw
};

struct PairDataset {
    std::vector<LabeledPair> pairs;  // temporal order preserved
    double eta = 0.1;
    std::uint64_t seed = 0;
    int dimension = 1;
    std::string source_trajectory_id;
};

// The contrastive construction: pair i = (x_{2i eta}, x'), where x' is the
// next observation with probability 1/2 (label 1) and a fresh contrast draw
// otherwise (label 0). An odd trailing observation is dropped.
PairDataset build_pairs(const Trajectory& traj, const ContrastSpec& contrast,
                        std::uint64_t seed);

struct CqResult {
    double c_q;           // max over the grid of max(ratio, 1/ratio)
    double log_c_q;       // log c_q, safe when c_q overflows double range
    double max_ratio;     // max p* / q
    double min_ratio;     // min p* / q
    Vec argmax_x, argmax_xp;
    Vec argmin_x, argmin_xp;
};

// Grid maximization of the kernel/contrast ratio on the working box.
CqResult compute_cq(const PotentialSpec& spec, const ContrastSpec& contrast, double eta,
                    const std::vector<Vec>& grid_x, const std::vector<Vec>& grid_xp);

// Convenience: d-dimensional tensor grids with `per_axis` points on [-r, r].
CqResult compute_cq_box(const PotentialSpec& spec, const ContrastSpec& contrast, double eta,
                        double box_radius, int per_axis);

}  // namespace nck
