#include <doctest.h>

#include <cmath>

#include "nck/errors.hpp"
#include "nck/mixing.hpp"
#include "nck/quadrature.hpp"
#include "nck/theory.hpp"

using namespace nck;

namespace {

const PotentialSpec kOu1 = PotentialSpec::quadratic_ou_1d(1.0);

double gauss(double x, double m, double v) {
    return std::exp(-0.5 * (x - m) * (x - m) / v) / std::sqrt(2.0 * M_PI * v);
}

FiniteChain random_chain(Rng& rng, int n) {
    std::vector<double> p(static_cast<std::size_t>(n) * n);
    for (auto& v : p) v = rng.uniform() + 0.05;
    for (int i = 0; i < n; ++i) {
        double row = 0.0;
        for (int j = 0; j < n; ++j) row += p[i * n + j];
        for (int j = 0; j < n; ++j) p[i * n + j] /= row;
    }
    Vec q(n);
    double qs = 0.0;
    for (auto& v : q) {
        v = rng.uniform() + 0.05;
        qs += v;
    }
    for (auto& v : q) v /= qs;
    return FiniteChain::make(p, q);
}

}  // namespace

// =============================================================================
// total variation
// =============================================================================

TEST_CASE("TV of identical densities vanishes") {
    auto p = [](double x) { return gauss(x, 0.0, 1.0); };
    CHECK(tv_distance(p, p, -10.0, 10.0) < 1e-8);
}

TEST_CASE("equal-variance Gaussian TV matches the closed form") {
    auto p = [](double x) { return gauss(x, 0.0, 1.0); };
    auto q = [](double x) { return gauss(x, 1.0, 1.0); };
    const double closed = 2.0 * normal_cdf(0.5) - 1.0;
    CHECK(closed == doctest::Approx(0.38292).epsilon(1e-4));
    CHECK(tv_distance(p, q, -10.0, 11.0) == doctest::Approx(closed).epsilon(1e-9));
}

TEST_CASE("densities with separated support have TV one") {
    auto p = [](double x) { return gauss(x, 0.0, 0.25); };
    auto q = [](double x) { return gauss(x, 20.0, 0.25); };
    CHECK(tv_distance(p, q, -10.0, 30.0, 64, 4096) == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("normalization defects are attached to the report") {
    auto p = [](double x) { return 0.9 * gauss(x, 0.0, 1.0); };
    auto q = [](double x) { return gauss(x, 0.0, 1.0); };
    const auto rep = tv_distance_full(p, q, -10.0, 10.0);
    CHECK_FALSE(rep.normalized);
    CHECK(rep.mass_p == doctest::Approx(0.9).epsilon(1e-10));
    CHECK(rep.mass_q == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("Monte-Carlo TV agrees with quadrature TV") {
    auto p = [](double x) { return gauss(x, 0.0, 1.0); };
    auto q = [](double x) { return gauss(x, 1.0, 1.0); };
    const auto mc = tv_distance_mc(p, q, [](Rng& r) { return r.normal(); }, 400000, 11);
    const double closed = 2.0 * normal_cdf(0.5) - 1.0;
    CHECK(std::abs(mc.tv - closed) <= 4.0 * mc.se);
}

TEST_CASE("TV satisfies the triangle inequality on random Gaussian triples") {
    Rng rng(3);
    for (int trial = 0; trial < 20; ++trial) {
        const double m1 = rng.normal(), m2 = rng.normal(), m3 = rng.normal();
        const double v1 = 0.3 + rng.uniform(), v2 = 0.3 + rng.uniform(),
                     v3 = 0.3 + rng.uniform();
        auto p = [&](double x) { return gauss(x, m1, v1); };
        auto q = [&](double x) { return gauss(x, m2, v2); };
        auto r = [&](double x) { return gauss(x, m3, v3); };
        const double pq = tv_distance(p, q, -12.0, 12.0);
        const double qr = tv_distance(q, r, -12.0, 12.0);
        const double pr = tv_distance(p, r, -12.0, 12.0);
        CHECK(pr <= pq + qr + 1e-9);
    }
}

// =============================================================================
// beta coefficients of the diffusion
// =============================================================================

TEST_CASE("beta decays to zero and obeys the closed-form bound at t = 1") {
    CHECK(beta_point(kOu1, 20.0) < 1e-6);
    const double b1 = beta_point(kOu1, 1.0);
    CHECK(b1 <= 1.0 / M_PI);  // B / sqrt(2 pi) with B = sqrt(2/pi)
    CHECK(b1 > 0.0);
}

TEST_CASE("beta is non-increasing in t") {
    double prev = 2.0;
    for (double t : {0.25, 0.5, 1.0, 2.0, 4.0}) {
        const double b = beta_point(kOu1, t);
        CHECK(b <= prev + 1e-12);
        prev = b;
    }
}

TEST_CASE("beta stays below min(1, B/sqrt(2 pi t)) at every checked t") {
    const double b_norm = std::sqrt(2.0 / M_PI);
    const auto curve = ou_beta_curve(b_norm);
    for (double t : {0.25, 0.5, 1.0, 2.0, 4.0})
        CHECK(beta_point(kOu1, t) <= curve(t) + 1e-8);
}

TEST_CASE("pointwise mixing bound on the working grid") {
    const double b_norm = std::sqrt(2.0 / M_PI);
    const auto rep = mixing_bound_check(kOu1, {1.0, 1.5, 2.0, 2.5, 3.0, 4.0, 6.0, 8.0},
                                        linspace(-2.0, 2.0, 21), b_norm);
    CHECK(rep.all_ok);
    CHECK(rep.rows.size() == 8 * 21);
    // the x = 1, t = 1 row in particular stays below 1/pi
    for (const auto& row : rep.rows)
        if (row.x == 1.0 && row.t == 1.0) {
            CHECK(row.tv <= 1.0 / M_PI);
            CHECK(row.bound == doctest::Approx(1.0 / M_PI).epsilon(1e-12));
        }
}

TEST_CASE("the bound curve itself decays as t^{-1/2}") {
    const auto curve = ou_beta_curve(std::sqrt(2.0 / M_PI));
    Vec ts{1.0, 2.0, 4.0, 8.0}, bs;
    for (double t : ts) bs.push_back(curve(t));
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < ts.size(); ++i) {
        const double lx = std::log(ts[i]), ly = std::log(bs[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    CHECK((4 * sxy - sx * sy) / (4 * sxx - sx * sx) == doctest::Approx(-0.5).epsilon(1e-12));
}

// =============================================================================
// exact pair-mixing identity on finite chains
// =============================================================================

TEST_CASE("two-state chain with uniform contrast") {
    const FiniteChain chain = FiniteChain::make({0.9, 0.1, 0.2, 0.8}, {0.5, 0.5});
    CHECK(chain.pi[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    for (int t = 1; t <= 10; ++t) {
        const auto r = beta_pair_exact(chain, t);
        CHECK(r.equal);
        CHECK(std::abs(r.beta_points - r.beta_pairs) <= 1e-12);
    }
}

TEST_CASE("stationary-independent chain mixes instantly") {
    // all rows equal to pi: conditional law is already stationary
    const FiniteChain chain =
        FiniteChain::make({0.3, 0.7, 0.3, 0.7}, {0.4, 0.6});
    const auto r = beta_pair_exact(chain, 1);
    CHECK(std::abs(r.beta_points) <= 1e-14);
    CHECK(std::abs(r.beta_pairs) <= 1e-14);
    CHECK(std::abs(r.beta_pairs_sequential) <= 1e-14);
}

TEST_CASE("five-state random chain at t = 3") {
    Rng rng(5);
    const FiniteChain chain = random_chain(rng, 5);
    const auto r = beta_pair_exact(chain, 3);
    CHECK(r.equal);
}

TEST_CASE("pair identity holds exactly on 100 random chains x 10 lags") {
    Rng rng(7);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const FiniteChain chain = random_chain(rng, 2 + static_cast<int>(rng.below(9)));
        for (int t = 1; t <= 10; ++t) {
            const auto r = beta_pair_exact(chain, t);
            worst = std::max(worst, std::abs(r.beta_points - r.beta_pairs));
        }
    }
    CHECK(worst <= 1e-12);
}

namespace {

// point-sequence beta at an arbitrary chain lag, by direct matrix power
double beta_points_at_lag(const FiniteChain& chain, int lag) {
    const int n = chain.n_states;
    std::vector<double> p(static_cast<std::size_t>(n) * n, 0.0);
    for (int i = 0; i < n; ++i) p[i * n + i] = 1.0;
    for (int k = 0; k < lag; ++k) {
        std::vector<double> next(p.size(), 0.0);
        for (int i = 0; i < n; ++i)
            for (int l = 0; l < n; ++l)
                for (int j = 0; j < n; ++j)
                    next[i * n + j] += p[i * n + l] * chain.p(l, j);
        p.swap(next);
    }
    double beta = 0.0;
    for (int i = 0; i < n; ++i) {
        double acc = 0.0;
        for (int j = 0; j < n; ++j) acc += std::abs(p[i * n + j] - chain.pi[j]);
        beta += chain.pi[i] * 0.5 * acc;
    }
    return beta;
}

}  // namespace

TEST_CASE("trajectory-coupled pairs sit between the lag-2t and averaged-lag bounds") {
    // taking the partner from the realized path leaks one step of information:
    // beta_points(2t) <= beta_seq <= (beta_points(2t-1) + beta_points(2t)) / 2
    Rng rng(9);
    for (int trial = 0; trial < 30; ++trial) {
        const int n = 2 + static_cast<int>(rng.below(9));
        const FiniteChain chain = random_chain(rng, n);
        for (int t = 1; t <= 5; ++t) {
            const auto r = beta_pair_exact(chain, t);
            const double upper =
                0.5 * (beta_points_at_lag(chain, 2 * t - 1) + beta_points_at_lag(chain, 2 * t));
            CHECK(r.beta_pairs_sequential >= r.beta_points - 1e-12);
            CHECK(r.beta_pairs_sequential <= upper + 1e-12);
        }
    }
}

TEST_CASE("finite-chain validation rejects malformed inputs") {
    CHECK_THROWS_AS(FiniteChain::make({0.5, 0.4, 0.2, 0.8}, {0.5, 0.5}), invalid_input);
    CHECK_THROWS_AS(FiniteChain::make({0.9, 0.1, 0.2, 0.8}, {0.0, 1.0}), invalid_input);
    CHECK_THROWS_AS(beta_pair_exact(FiniteChain::make({0.9, 0.1, 0.2, 0.8}, {0.5, 0.5}), 0),
                    invalid_input);
}

// =============================================================================
// blocked generalization bound
// =============================================================================

TEST_CASE("mu = 1 removes the dependence penalty") {
    GeneralizationConfig cfg;
    cfg.mu = 1;
    cfg.delta = 0.05;
    const auto rad = rademacher_curve(0.5);
    const auto r = mohri_bound(cfg, rad, ou_beta_curve(0.8));
    CHECK(r.delta_appr == 0.0);
    CHECK(r.valid);
    CHECK(r.bound_value ==
          doctest::Approx(rad(1) + std::sqrt(std::log(2.0 / 0.05) / 2.0)).epsilon(1e-12));
}

TEST_CASE("iid data keeps delta_appr at zero for every mu") {
    GeneralizationConfig cfg;
    const auto zero_beta = [](double) { return 0.0; };
    for (int mu : {1, 5, 50}) {
        cfg.mu = mu;
        CHECK(mohri_bound(cfg, rademacher_curve(0.5), zero_beta).delta_appr == 0.0);
    }
}

TEST_CASE("bound responds monotonically to its inputs") {
    GeneralizationConfig cfg;
    cfg.mu = 2;  // admissible at the default horizon
    const auto beta = ou_beta_curve(0.8);
    const auto base = mohri_bound(cfg, rademacher_curve(0.5), beta);
    REQUIRE(base.valid);
    const auto bigger_r = mohri_bound(cfg, rademacher_curve(0.6), beta);
    CHECK(bigger_r.bound_value > base.bound_value);
    const auto worse_mixing = mohri_bound(cfg, rademacher_curve(0.5), ou_beta_curve(1.6));
    REQUIRE(worse_mixing.valid);
    CHECK(worse_mixing.delta_appr > base.delta_appr);
    CHECK(worse_mixing.bound_value > base.bound_value);
}

TEST_CASE("the bound is U-shaped in mu with an interior minimizer") {
    GeneralizationConfig cfg;
    cfg.total_time = 1e4;
    cfg.eta = 0.1;
    cfg.delta = 0.05;
    cfg.k_proxy = 0.5;
    cfg.b_norm = std::sqrt(2.0 / M_PI);
    const auto mu = select_mu(cfg, rademacher_curve(cfg.k_proxy), ou_beta_curve(cfg.b_norm));
    CHECK(mu.feasible);
    CHECK(mu.mu_star >= 2);
    CHECK(mu.mu_star <= mu.mu_max - 1);
    CHECK(mu.recipe_mu > 0.0);
    CHECK(std::isfinite(mu.recipe_mu));
}

TEST_CASE("doubling T weakly improves the optimized bound") {
    GeneralizationConfig cfg;
    cfg.eta = 0.1;
    cfg.delta = 0.05;
    cfg.k_proxy = 0.5;
    cfg.b_norm = std::sqrt(2.0 / M_PI);
    double prev = 1e300;
    for (double total_time : {1e3, 1e4, 1e5}) {
        cfg.total_time = total_time;
        const auto mu =
            select_mu(cfg, rademacher_curve(cfg.k_proxy), ou_beta_curve(cfg.b_norm));
        REQUIRE(mu.feasible);
        CHECK(mu.bound_at_mu_star <= prev + 1e-12);
        prev = mu.bound_at_mu_star;
    }
}

TEST_CASE("degenerate horizons report infeasibility") {
    GeneralizationConfig cfg;
    cfg.total_time = 0.1;
    cfg.eta = 0.1;  // zero usable blocks
    const auto mu = select_mu(cfg, rademacher_curve(0.5), ou_beta_curve(0.8));
    CHECK_FALSE(mu.feasible);
}

// =============================================================================
// empirical Rademacher complexity
// =============================================================================

namespace {

class ZeroModel final : public AscentModel {
  public:
    double signed_sum(std::span<const double>) override { return 0.0; }
    void ascend(std::span<const double>, double, int) override {}
};

// {h == c : c in [0, 1]}
class ConstantModel final : public AscentModel {
  public:
    explicit ConstantModel(double c) : c_(c) {}
    double signed_sum(std::span<const double> eps) override {
        double s = 0.0;
        for (double e : eps) s += e;
        return c_ * s;
    }
    void ascend(std::span<const double> eps, double lr, int steps) override {
        double s = 0.0;
        for (double e : eps) s += e;
        for (int k = 0; k < steps; ++k) {
            c_ += lr * s;
            c_ = std::clamp(c_, 0.0, 1.0);
        }
    }

  private:
    double c_;
};

}  // namespace

TEST_CASE("the zero singleton class has no Rademacher complexity") {
    const auto factory = [](std::uint64_t) { return std::make_unique<ZeroModel>(); };
    CHECK(empirical_rademacher(factory, 16, 8, 4, 10, 0.1, 1) == 0.0);
}

TEST_CASE("the constant class at mu = 1 reaches E|eps| = 1") {
    const auto factory = [](std::uint64_t seed) {
        return std::make_unique<ConstantModel>(0.5 * (seed % 3));
    };
    CHECK(empirical_rademacher(factory, 1, 16, 4, 50, 0.1, 3) == doctest::Approx(1.0));
}

TEST_CASE("MLP class estimate decays with sample size") {
    const auto traj = simulate_trajectory(kOu1, 0.1, 500.0, 11);
    auto data = std::make_shared<std::vector<LabeledPair>>(
        build_pairs(traj, ContrastSpec::matched_ou(kOu1, 0.1), 13).pairs);
    REQUIRE(data->size() >= 800);
    const auto factory = mlp_ascent_factory(1, {16, 16}, Activation::Tanh, data);
    // reduced budget for the unit test; the acceptance suite uses the full one
    const double at_mu = empirical_rademacher(factory, 50, 3, 10, 100, 0.05, 15);
    const double at_4mu = empirical_rademacher(factory, 200, 3, 10, 100, 0.05, 17);
    CHECK(at_mu > 0.0);
    CHECK(at_4mu <= at_mu + 0.05);
}

// =============================================================================
// generalization gap machinery
// =============================================================================

TEST_CASE("a fixed classifier's gap is Monte-Carlo noise") {
    const double eta = 0.1;
    const auto q = ContrastSpec::matched_ou(kOu1, eta);
    const auto traj = simulate_trajectory(kOu1, eta, 2000.0, 19);
    const auto ds = build_pairs(traj, q, 21);
    const auto h = oracle_classifier(kOu1, q, eta);
    double emp = 0.0;
    for (const auto& p : ds.pairs) emp += l2_loss(h(p.x, p.x_prime), p.label);
    emp /= ds.pairs.size();
    const McEstimate pop = population_risk_mc(h, kOu1, q, eta, 1000000, 23);
    // empirical risk of a fixed h fluctuates at ~1/sqrt(m)
    const double m = static_cast<double>(ds.pairs.size());
    CHECK(std::abs(emp - pop.value) <= 4.0 / std::sqrt(m));
}

TEST_CASE("gap table is populated and reports the trend statistic") {
    const double eta = 0.1;
    const auto q = ContrastSpec::matched_ou(kOu1, eta);
    TrainConfig cfg;
    cfg.epochs = 3;
    cfg.holdout_fraction = 0.0;
    cfg.batch_size = 32;
    const auto table = generalization_gap_measure(kOu1, q, eta, {20.0, 100.0}, {16, 16},
                                                  Activation::Tanh, cfg, 5, 20000, 25);
    REQUIRE(table.rows.size() == 2);
    CHECK(table.rows[0].m == 100);
    CHECK(table.rows[1].m == 500);
    for (const auto& row : table.rows) {
        CHECK(row.gaps.size() == 5);
        for (double g : row.gaps) CHECK(g >= 0.0);
        CHECK(row.gap_se >= 0.0);
    }
    CHECK(std::abs(table.spearman_gap_vs_t) <= 1.0);
    CHECK_THROWS_AS(generalization_gap_measure(kOu1, q, eta, {20.0}, {8}, Activation::Tanh,
                                               cfg, 2, 1000, 1),
                    invalid_input);
}
