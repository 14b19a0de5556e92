#include "nck/mixing.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <limits>

#include "nck/errors.hpp"
#include "nck/parallel.hpp"
#include "nck/quadrature.hpp"
#include "nck/theory.hpp"

namespace nck {

TvResult tv_distance_full(const Density1D& p, const Density1D& q, double lo, double hi,
                          int nodes, int scan) {
    const auto cuts = find_sign_changes([&](double x) { return p(x) - q(x); }, lo, hi, scan);
    TvResult r;
    r.tv = 0.5 * integrate_split([&](double x) { return std::abs(p(x) - q(x)); }, lo, hi,
                                 nodes, cuts);
    r.mass_p = integrate_split(p, lo, hi, nodes, cuts);
    r.mass_q = integrate_split(q, lo, hi, nodes, cuts);
    r.normalized = std::abs(r.mass_p - 1.0) <= 1e-6 && std::abs(r.mass_q - 1.0) <= 1e-6;
    return r;
}

double tv_distance(const Density1D& p, const Density1D& q, double lo, double hi, int nodes,
                   int scan) {
    return tv_distance_full(p, q, lo, hi, nodes, scan).tv;
}

McTv tv_distance_mc(const Density1D& p, const Density1D& q,
                    const std::function<double(Rng&)>& p_sampler, std::size_t n,
                    std::uint64_t seed) {
    Rng rng(seed);
    Vec vals(n);
    for (auto& v : vals) {
        const double x = p_sampler(rng);
        v = 0.5 * std::abs(1.0 - q(x) / p(x));
    }
    const MeanSe ms = mean_se(vals);
    return {ms.mean, ms.se};
}

namespace {

double gaussian_pdf(double x, double mean, double var) {
    const double r = x - mean;
    return std::exp(-0.5 * r * r / var) / std::sqrt(2.0 * M_PI * var);
}

// TV(N(m, v), N(0, v0)) over [-hw, hw]
double tv_gaussians(double m, double v, double v0, double hw) {
    return tv_distance([=](double x) { return gaussian_pdf(x, m, v); },
                       [=](double x) { return gaussian_pdf(x, 0.0, v0); }, -hw, hw, 64, 1024);
}

}  // namespace

double beta_point(const PotentialSpec& spec, double t, int x_nodes, double x_box) {
    if (!spec.is_ou() || spec.dimension != 1)
        throw unsupported_error("beta_point: quadrature mode requires QuadraticOu, d = 1");
    if (t <= 0.0) throw invalid_input("beta_point: t must be > 0");
    const double lam = spec.theta_eigvals[0];
    const double a = std::exp(-lam * t);
    const double var_t = (1.0 - a * a) / lam;
    const double var_pi = 1.0 / lam;
    const double hw = x_box / std::sqrt(lam) + 6.0;
    const auto& rule = GaussLegendre::get(x_nodes);
    std::vector<double> terms(rule.nodes.size());
    const double half = x_box / std::sqrt(lam);
    par::for_each_index(terms.size(), [&](std::size_t i) {
        const double x = half * rule.nodes[i];
        const double w = half * rule.weights[i];
        terms[i] = w * gaussian_pdf(x, 0.0, var_pi) * tv_gaussians(a * x, var_t, var_pi, hw);
    });
    return par::pairwise_sum(terms);
}

std::function<double(double)> ou_beta_curve(double b_norm) {
    return [b_norm](double t) { return std::min(1.0, b_norm / std::sqrt(2.0 * M_PI * t)); };
}

MixingBoundReport mixing_bound_check(const PotentialSpec& spec, const Vec& t_grid,
                                     const Vec& x_grid, double b_norm) {
    if (!spec.is_ou() || spec.dimension != 1)
        throw unsupported_error("mixing_bound_check: requires QuadraticOu, d = 1");
    MixingBoundReport rep;
    rep.rows.resize(t_grid.size() * x_grid.size());
    const double lam = spec.theta_eigvals[0];
    par::for_each_index(rep.rows.size(), [&](std::size_t k) {
        const double t = t_grid[k / x_grid.size()];
        const double x = x_grid[k % x_grid.size()];
        const double a = std::exp(-lam * t);
        const double tv = tv_gaussians(a * x, (1.0 - a * a) / lam, 1.0 / lam,
                                       8.0 / std::sqrt(lam) + std::abs(x));
        const double bound = b_norm / std::sqrt(2.0 * M_PI * t);
        rep.rows[k] = {x, t, tv, bound, tv <= bound + 1e-8};
    });
    rep.all_ok = true;
    rep.worst_margin = -1e300;
    for (const auto& row : rep.rows) {
        rep.all_ok = rep.all_ok && row.ok;
        rep.worst_margin = std::max(rep.worst_margin, row.tv - row.bound);
    }
    return rep;
}

// --- exact finite-chain oracle ---------------------------------------------------

void FiniteChain::validate() const {
    if (n_states < 1 || n_states > 50)
        throw invalid_input("FiniteChain: n_states must be in [1, 50]");
    if (transition.size() != static_cast<std::size_t>(n_states) * n_states ||
        pi.size() != static_cast<std::size_t>(n_states) ||
        q.size() != static_cast<std::size_t>(n_states))
        throw invalid_input("FiniteChain: inconsistent sizes");
    for (int i = 0; i < n_states; ++i) {
        double row = 0.0;
        for (int j = 0; j < n_states; ++j) {
            if (p(i, j) < 0.0) throw invalid_input("FiniteChain: negative transition entry");
            row += p(i, j);
        }
        if (std::abs(row - 1.0) > 1e-12)
            throw invalid_input("FiniteChain: rows must sum to 1 within 1e-12");
    }
    for (int j = 0; j < n_states; ++j) {
        double v = 0.0;
        for (int i = 0; i < n_states; ++i) v += pi[i] * p(i, j);
        if (std::abs(v - pi[j]) > 1e-10)
            throw invalid_input("FiniteChain: pi is not stationary within 1e-10");
    }
    for (double v : q)
        if (!(v > 0.0)) throw invalid_input("FiniteChain: q entries must be positive");
}

FiniteChain FiniteChain::make(std::vector<double> transition, Vec q) {
    const int n = static_cast<int>(q.size());
    FiniteChain chain;
    chain.n_states = n;
    chain.transition = std::move(transition);
    chain.q = std::move(q);
    // solve pi (P - I) = 0 with sum pi = 1
    Eigen::MatrixXd a(n + 1, n);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(n + 1);
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) a(j, i) = chain.p(i, j) - (i == j ? 1.0 : 0.0);
        a(n, j) = 1.0;
    }
    b(n) = 1.0;
    Eigen::VectorXd pi = a.colPivHouseholderQr().solve(b);
    chain.pi.assign(n, 0.0);
    for (int i = 0; i < n; ++i) chain.pi[i] = pi(i);
    chain.validate();
    return chain;
}

namespace {

std::vector<double> mat_power(const std::vector<double>& m, int n, int t) {
    std::vector<double> result(static_cast<std::size_t>(n) * n, 0.0);
    for (int i = 0; i < n; ++i) result[i * n + i] = 1.0;
    std::vector<double> base = m, tmp(result.size());
    int k = t;
    while (k > 0) {
        if (k & 1) {
            std::fill(tmp.begin(), tmp.end(), 0.0);
            for (int i = 0; i < n; ++i)
                for (int l = 0; l < n; ++l) {
                    const double v = result[i * n + l];
                    if (v == 0.0) continue;
                    for (int j = 0; j < n; ++j) tmp[i * n + j] += v * base[l * n + j];
                }
            result.swap(tmp);
        }
        k >>= 1;
        if (k == 0) break;
        std::fill(tmp.begin(), tmp.end(), 0.0);
        for (int i = 0; i < n; ++i)
            for (int l = 0; l < n; ++l) {
                const double v = base[i * n + l];
                if (v == 0.0) continue;
                for (int j = 0; j < n; ++j) tmp[i * n + j] += v * base[l * n + j];
            }
        base.swap(tmp);
    }
    return result;
}

}  // namespace

BetaPairResult beta_pair_exact(const FiniteChain& chain, int t_steps) {
    chain.validate();
    if (t_steps < 1) throw invalid_input("beta_pair_exact: t_steps must be >= 1");
    const int n = chain.n_states;
    const auto p2t = mat_power(chain.transition, n, 2 * t_steps);
    const auto p2tm1 = mat_power(chain.transition, n, 2 * t_steps - 1);

    BetaPairResult out;

    // point sequence at chain lag 2t
    double bp = 0.0;
    for (int s = 0; s < n; ++s) {
        double acc = 0.0;
        for (int sp = 0; sp < n; ++sp) acc += std::abs(p2t[s * n + sp] - chain.pi[sp]);
        bp += chain.pi[s] * 0.5 * acc;
    }
    out.beta_points = bp;

    // pair emission kernel K(s, w) = P(s, w)/2 + q(w)/2
    auto kk = [&](int s, int w) { return 0.5 * chain.p(s, w) + 0.5 * chain.q[w]; };

    // pair process, partner conditionally independent given its first element:
    // Joint(z_0, z_t) = pi(s) K(s,w) P^{2t}(s,s') K(s',w'); exact four-index sum
    double pairs = 0.0;
    for (int s = 0; s < n; ++s)
        for (int w = 0; w < n; ++w) {
            const double z0 = chain.pi[s] * kk(s, w);
            for (int sp = 0; sp < n; ++sp) {
                const double cond = p2t[s * n + sp];
                for (int wp = 0; wp < n; ++wp) {
                    const double joint = z0 * cond * kk(sp, wp);
                    const double prod = z0 * chain.pi[sp] * kk(sp, wp);
                    pairs += std::abs(joint - prod);
                }
            }
        }
    out.beta_pairs = 0.5 * pairs;
    out.equal = std::abs(out.beta_points - out.beta_pairs) <= 1e-12;

    // trajectory semantics: w_0 is the realized next state with posterior
    // weight lambda = P(s,w)/(P(s,w)+q(w)); the chain continues through it
    double seq = 0.0;
    for (int s = 0; s < n; ++s)
        for (int w = 0; w < n; ++w) {
            const double weight = chain.pi[s] * kk(s, w);
            const double lambda = chain.p(s, w) / (chain.p(s, w) + chain.q[w]);
            double acc = 0.0;
            for (int sp = 0; sp < n; ++sp) {
                const double mu =
                    lambda * p2tm1[w * n + sp] + (1.0 - lambda) * p2t[s * n + sp];
                acc += std::abs(mu - chain.pi[sp]);
            }
            seq += weight * 0.5 * acc;
        }
    out.beta_pairs_sequential = seq;
    return out;
}

// --- blocked generalization bound ---------------------------------------------------

MohriResult mohri_bound(const GeneralizationConfig& cfg,
                        const std::function<double(int)>& rademacher_at_mu,
                        const std::function<double(double)>& beta_fn) {
    if (cfg.mu < 1) throw invalid_input("mohri_bound: mu must be >= 1");
    if (cfg.delta <= 0.0 || cfg.delta >= 1.0)
        throw invalid_input("mohri_bound: delta must be in (0, 1)");
    MohriResult r;
    r.delta_appr = 2.0 * (cfg.mu - 1) * beta_fn(cfg.total_time / (2.0 * cfg.mu));
    r.valid = cfg.delta > r.delta_appr;
    r.bound_value =
        r.valid ? rademacher_at_mu(cfg.mu) +
                      std::sqrt(std::log(2.0 / (cfg.delta - r.delta_appr)) / (2.0 * cfg.mu))
                : std::numeric_limits<double>::infinity();
    return r;
}

std::function<double(int)> rademacher_curve(double k_proxy) {
    return [k_proxy](int mu) {
        const double m = static_cast<double>(std::max(mu, 2));
        return k_proxy * std::sqrt(std::log(m) / mu);
    };
}

SelectMuResult select_mu(const GeneralizationConfig& cfg,
                         const std::function<double(int)>& rademacher_at_mu,
                         const std::function<double(double)>& beta_fn) {
    SelectMuResult out;
    out.mu_max = static_cast<int>(std::floor(cfg.total_time / (2.0 * cfg.eta) + 1e-9));
    if (out.mu_max < 1) return out;
    double best = std::numeric_limits<double>::infinity();
    double best_delta_appr = 0.0;
    for (int mu = 1; mu <= out.mu_max; ++mu) {
        GeneralizationConfig probe = cfg;
        probe.mu = mu;
        const MohriResult r = mohri_bound(probe, rademacher_at_mu, beta_fn);
        if (!r.valid) continue;
        out.feasible = true;
        if (r.bound_value < best) {
            best = r.bound_value;
            out.mu_star = mu;
            best_delta_appr = r.delta_appr;
        }
    }
    if (!out.feasible) return out;
    out.bound_at_mu_star = best;
    out.interior = out.mu_star > 1 && out.mu_star < out.mu_max;
    // closed-form recipe evaluated at the grid minimizer's delta_appr
    out.recipe_mu = cfg.k_proxy * std::sqrt(std::log(1.0 / (cfg.delta - best_delta_appr))) /
                    (cfg.delta_gen_target * cfg.delta_gen_target);
    return out;
}

// --- empirical Rademacher complexity -------------------------------------------------

double empirical_rademacher(const AscentModelFactory& factory, std::size_t mu,
                            int n_sign_draws, int restarts, int ascent_steps, double lr,
                            std::uint64_t seed) {
    if (mu == 0) throw invalid_input("empirical_rademacher: mu must be >= 1");
    Vec per_draw(n_sign_draws);
    par::for_each_index(static_cast<std::size_t>(n_sign_draws), [&](std::size_t d) {
        Rng rng(derive_seed(seed, "rademacher-draw", d));
        std::vector<double> eps(mu), neg(mu);
        for (std::size_t i = 0; i < mu; ++i) {
            eps[i] = rng.coin() ? 1.0 : -1.0;
            neg[i] = -eps[i];
        }
        double best = 0.0;
        for (int r = 0; r < restarts; ++r) {
            const auto& signs = (r % 2 == 0) ? eps : neg;  // cover |.| both ways
            auto model = factory(derive_seed(seed, "rademacher-restart", d * 1000 + r));
            model->ascend(signs, lr, ascent_steps);
            best = std::max(best, std::abs(model->signed_sum(signs)));
        }
        per_draw[d] = best / static_cast<double>(mu);
    });
    return par::pairwise_sum(per_draw) / n_sign_draws;
}

namespace {

class MlpAscent final : public AscentModel {
  public:
    MlpAscent(int dimension, const std::vector<int>& hidden, Activation act,
              std::shared_ptr<const std::vector<LabeledPair>> data, std::uint64_t seed)
        : model_(Mlp::create(dimension, hidden, act, seed)), data_(std::move(data)) {}

    double signed_sum(std::span<const double> eps) override {
        double s = 0.0;
        for (std::size_t i = 0; i < eps.size(); ++i)
            s += eps[i] * model_.forward((*data_)[i].x, (*data_)[i].x_prime);
        return s;
    }

    void ascend(std::span<const double> eps, double lr, int steps) override {
        std::span<const LabeledPair> batch(data_->data(), eps.size());
        for (int k = 0; k < steps; ++k) {
            const Gradients g = grad_weighted_output(model_, batch, eps);
            axpy_params(model_, g, lr);  // ascent
        }
    }

  private:
    Mlp model_;
    std::shared_ptr<const std::vector<LabeledPair>> data_;
};

}  // namespace

AscentModelFactory mlp_ascent_factory(int dimension, std::vector<int> hidden, Activation act,
                                      std::shared_ptr<const std::vector<LabeledPair>> data) {
    return [=](std::uint64_t seed) {
        return std::make_unique<MlpAscent>(dimension, hidden, act, data, seed);
    };
}

// --- generalization gap trend ----------------------------------------------------------

GapTable generalization_gap_measure(const PotentialSpec& spec, const ContrastSpec& contrast,
                                    double eta, const Vec& t_grid,
                                    const std::vector<int>& hidden, Activation act,
                                    const TrainConfig& train_cfg, int n_repeats,
                                    std::size_t n_mc, std::uint64_t seed) {
    if (n_repeats < 5)
        throw invalid_input("generalization_gap_measure: n_repeats must be >= 5");
    GapTable table;
    table.rows.resize(t_grid.size());
    const std::size_t units = t_grid.size() * n_repeats;
    Vec all_gaps(units);
    par::for_each_index(units, [&](std::size_t u) {
        const std::size_t ti = u / n_repeats;
        const double total_time = t_grid[ti];
        const std::uint64_t s0 = derive_seed(seed, "gap-traj", u);
        const Trajectory traj = simulate_trajectory(spec, eta, total_time, s0);
        const PairDataset ds = build_pairs(traj, contrast, derive_seed(seed, "gap-pairs", u));
        Mlp proto = Mlp::create(spec.dimension, hidden, act,
                                derive_seed(seed, "gap-init", u));
        TrainConfig cfg = train_cfg;
        cfg.seed = derive_seed(seed, "gap-train", u);
        const TrainResult tr = train(std::move(proto), ds, cfg);
        const McEstimate pop = population_risk_mc(evaluator(tr.model), spec, contrast, eta,
                                                  n_mc, derive_seed(seed, "gap-mc", u));
        all_gaps[u] = std::abs(tr.train_risk - pop.value);
    });
    Vec t_for_corr, gap_for_corr;
    for (std::size_t ti = 0; ti < t_grid.size(); ++ti) {
        GapRow& row = table.rows[ti];
        row.total_time = t_grid[ti];
        row.m = static_cast<std::size_t>(std::floor(t_grid[ti] / eta + 1e-9)) / 2;
        row.gaps.assign(all_gaps.begin() + ti * n_repeats,
                        all_gaps.begin() + (ti + 1) * n_repeats);
        const MeanSe ms = mean_se(row.gaps);
        row.gap_mean = ms.mean;
        row.gap_se = ms.se;
        t_for_corr.push_back(row.total_time);
        gap_for_corr.push_back(row.gap_mean);
    }
    table.spearman_gap_vs_t =
        t_grid.size() >= 2 ? spearman(t_for_corr, gap_for_corr) : 0.0;
    return table;
}

}  // namespace nck
