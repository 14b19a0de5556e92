#pragma once

#include <memory>

#include "nck/classifier.hpp"
#include "nck/diffusion.hpp"
#include "nck/stats.hpp"

namespace nck {

using Density1D = std::function<double(double)>;

struct TvResult {
    double tv;
    double mass_p, mass_q;   // normalization defect attached to the report
    bool normalized;         // both masses within 1e-6 of 1
};

// 1/2 integral |p - q| on [lo, hi]; crossings of p - q are isolated first so
// every quadrature panel sees a smooth integrand.
TvResult tv_distance_full(const Density1D& p, const Density1D& q, double lo, double hi,
                          int nodes = 64, int scan = 2048);
double tv_distance(const Density1D& p, const Density1D& q, double lo, double hi,
                   int nodes = 64, int scan = 2048);

// Monte-Carlo mode: 1/2 E_{x ~ p} |1 - q(x)/p(x)| with a sampler for p.
struct McTv {
    double tv;
    double se;
};
McTv tv_distance_mc(const Density1D& p, const Density1D& q,
                    const std::function<double(Rng&)>& p_sampler, std::size_t n,
                    std::uint64_t seed);

// beta(t) = E_{x ~ pi} TV(P^t(.|x), pi) for the OU process (d = 1), quadrature
// over x with pi weights.
double beta_point(const PotentialSpec& spec, double t, int x_nodes = 128,
                  double x_box = 8.0);

// Closed-form beta curve used by the blocking bound: min(1, B / sqrt(2 pi t)).
std::function<double(double)> ou_beta_curve(double b_norm);

struct MixingBoundRow {
    double x, t, tv, bound;
    bool ok;
};
struct MixingBoundReport {
    std::vector<MixingBoundRow> rows;
    bool all_ok;
    double worst_margin;  // max tv - bound over the grid
};
// Pointwise check TV(P^t(.|x), pi) <= B / sqrt(2 pi t) + 1e-8 on the grid.
MixingBoundReport mixing_bound_check(const PotentialSpec& spec, const Vec& t_grid,
                                     const Vec& x_grid, double b_norm);

// --- exact finite-chain oracle -------------------------------------------------

struct FiniteChain {
    int n_states;
    std::vector<double> transition;  // row-major, row-stochastic
    Vec pi;                          // stationary vector
    Vec q;                           // contrast probability vector, all > 0

    double p(int i, int j) const { return transition[i * n_states + j]; }
    void validate() const;
    // solves pi P = pi for the given transition matrix
    static FiniteChain make(std::vector<double> transition, Vec q);
};

struct BetaPairResult {
    double beta_points;            // point sequence at chain lag 2 t_steps
    double beta_pairs;             // pair sequence at pair lag t_steps
    bool equal;                    // |beta_points - beta_pairs| <= 1e-12
    // Diagnostic: the pair process with the partner taken from the realized
    // trajectory (the chain continues through it). The lemma's equality does
    // not hold for this construction; see the bounds in the tests.
    double beta_pairs_sequential;
};

// Pair process on the finite chain: first elements step by P^2, the partner
// is the next state with probability 1/2 (drawn from P(s, .)) and a q draw
// otherwise. Both coefficients are computed by exact summation over the full
// (z_0, z_t) joint. beta_points is evaluated at chain lag 2 t_steps, the same
// physical time as pair lag t_steps.
BetaPairResult beta_pair_exact(const FiniteChain& chain, int t_steps);

// --- blocked generalization bound ------------------------------------------------

struct GeneralizationConfig {
    double total_time = 1e4;   // T
    double eta = 0.1;
    int mu = 1;                // block count used by mohri_bound
    double delta = 0.05;       // failure probability
    double k_proxy = 0.5;      // empirical Rademacher coefficient
    double b_norm = 0.7978845608028654;  // E_pi |x|
    double delta_gen_target = 0.1;
};

struct MohriResult {
    double delta_appr;
    double bound_value;  // meaningful only when valid
    bool valid;          // delta > delta_appr
};
MohriResult mohri_bound(const GeneralizationConfig& cfg,
                        const std::function<double(int)>& rademacher_at_mu,
                        const std::function<double(double)>& beta_fn);

// R_mu = k sqrt(log(max(mu, 2)) / mu); the max keeps mu = 1 off a degenerate
// zero.
std::function<double(int)> rademacher_curve(double k_proxy);

struct SelectMuResult {
    int mu_star = 0;
    double bound_at_mu_star = 0.0;
    double recipe_mu = 0.0;      // k sqrt(log(1/(delta - delta_appr))) / delta_gen^2
    bool feasible = false;       // some admissible mu exists
    int mu_max = 0;              // scan upper end, m = floor(T / (2 eta))
    bool interior = false;       // 1 < mu_star < mu_max
};
SelectMuResult select_mu(const GeneralizationConfig& cfg,
                         const std::function<double(int)>& rademacher_at_mu,
                         const std::function<double(double)>& beta_fn);

// --- empirical Rademacher complexity ----------------------------------------------

// A model the sign-ascent can drive: h values on a fixed dataset plus a
// gradient-ascent step on sum_i eps_i h(x_i).
class AscentModel {
  public:
    virtual ~AscentModel() = default;
    virtual double signed_sum(std::span<const double> eps) = 0;
    virtual void ascend(std::span<const double> eps, double lr, int steps) = 0;
};
using AscentModelFactory = std::function<std::unique_ptr<AscentModel>(std::uint64_t seed)>;

// (1/mu) mean over sign draws of the best |sum eps_i h(x_i)| found by random
// restarts + gradient ascent; a LOWER estimate of the empirical Rademacher
// complexity. Half the restarts ascend the flipped signs to cover |.|.
double empirical_rademacher(const AscentModelFactory& factory, std::size_t mu,
                            int n_sign_draws, int restarts, int ascent_steps, double lr,
                            std::uint64_t seed);

AscentModelFactory mlp_ascent_factory(int dimension, std::vector<int> hidden, Activation act,
                                      std::shared_ptr<const std::vector<LabeledPair>> data);

// --- generalization gap trend -----------------------------------------------------

struct GapRow {
    double total_time;
    std::size_t m;
    double gap_mean, gap_se;
    Vec gaps;
};
struct GapTable {
    std::vector<GapRow> rows;
    double spearman_gap_vs_t;
};

// For each T: train on a fresh trajectory and report |empirical risk -
// population risk| (population risk by Monte Carlo with n_mc pairs),
// averaged over n_repeats. The sup over H is approximated by the trained
// model, a lower estimate.
GapTable generalization_gap_measure(const PotentialSpec& spec, const ContrastSpec& contrast,
                                    double eta, const Vec& t_grid,
                                    const std::vector<int>& hidden, Activation act,
                                    const TrainConfig& train_cfg, int n_repeats,
                                    std::size_t n_mc, std::uint64_t seed);

}  // namespace nck
