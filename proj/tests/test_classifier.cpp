#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "nck/classifier.hpp"
#include "nck/errors.hpp"
#include "nck/quadrature.hpp"
#include "nck/theory.hpp"

using namespace nck;

namespace {

const PotentialSpec kOu1 = PotentialSpec::quadratic_ou_1d(1.0);

PairDataset synthetic_dataset(std::size_t m, std::uint64_t seed) {
    const auto traj = simulate_trajectory(kOu1, 0.1, 0.2 * m + 1.0, seed);
    return build_pairs(traj, ContrastSpec::matched_ou(kOu1, 0.1), seed + 1);
}

std::vector<double*> flat_params(Mlp& m) {
    std::vector<double*> out;
    for (auto& w : m.weights)
        for (auto& v : w) out.push_back(&v);
    for (auto& b : m.biases)
        for (auto& v : b) out.push_back(&v);
    return out;
}

std::vector<double> flat_grads(const Gradients& g) {
    std::vector<double> out;
    for (const auto& w : g.weights) out.insert(out.end(), w.begin(), w.end());
    for (const auto& b : g.biases) out.insert(out.end(), b.begin(), b.end());
    return out;
}

double batch_loss(const Mlp& m, std::span<const LabeledPair> batch) {
    double s = 0.0;
    for (const auto& p : batch) s += l2_loss(m.forward(p.x, p.x_prime), p.label);
    return s / batch.size();
}

}  // namespace

// =============================================================================
// forward pass
// =============================================================================

TEST_CASE("zero final layer gives 0.5 everywhere") {
    Mlp m = Mlp::create(1, {8, 8}, Activation::Tanh, 1);
    std::fill(m.weights.back().begin(), m.weights.back().end(), 0.0);
    std::fill(m.biases.back().begin(), m.biases.back().end(), 0.0);
    Rng rng(2);
    for (int k = 0; k < 100; ++k)
        CHECK(m.forward({rng.normal()}, {rng.normal()}) == 0.5);
}

TEST_CASE("forward is deterministic and stays in (0, 1)") {
    const Mlp m = Mlp::create(1, {64, 64}, Activation::Tanh, 3);
    Rng rng(4);
    for (int k = 0; k < 10000; ++k) {
        const Vec x{3.0 * rng.normal()}, xp{3.0 * rng.normal()};
        const double h = m.forward(x, xp);
        CHECK(h > 0.0);
        CHECK(h < 1.0);
        CHECK(m.forward(x, xp) == h);
    }
    CHECK_THROWS_AS(m.forward({1.0, 2.0}, {0.0}), invalid_input);
    CHECK_THROWS_AS(m.forward({std::nan("")}, {0.0}), invalid_input);
}

TEST_CASE("relu networks run and stay bounded") {
    const Mlp m = Mlp::create(1, {16, 16}, Activation::Relu, 5);
    Rng rng(6);
    for (int k = 0; k < 1000; ++k) {
        const double h = m.forward({rng.normal()}, {rng.normal()});
        CHECK(h > 0.0);
        CHECK(h < 1.0);
    }
}

// =============================================================================
// loss
// =============================================================================

TEST_CASE("l2 loss arithmetic") {
    CHECK(l2_loss(0.5, 1) == doctest::Approx(0.25));
    CHECK(l2_loss(0.5, 0) == doctest::Approx(0.25));
    CHECK(l2_loss(0.999999, 1) < 1e-11);
    CHECK_THROWS_AS(l2_loss(0.5, 2), invalid_input);
}

// =============================================================================
// gradients
// =============================================================================

TEST_CASE("backprop matches central finite differences in every layer") {
    const auto ds = synthetic_dataset(40, 7);
    for (Activation act : {Activation::Tanh, Activation::Relu}) {
        Mlp m = Mlp::create(1, {8, 8}, act, 9);
        std::span<const LabeledPair> batch(ds.pairs.data(), 16);
        const Gradients g = grad_loss(m, batch);
        Rng rng(11);
        const double h = 1e-6;
        // sample coordinates from each layer's weights and biases separately
        for (std::size_t layer = 0; layer < m.weights.size(); ++layer) {
            int checked = 0;
            for (int trial = 0; trial < 120 && checked < 34; ++trial) {
                const bool bias = trial % 4 == 3;
                auto& params = bias ? m.biases[layer] : m.weights[layer];
                const auto& grads = bias ? g.biases[layer] : g.weights[layer];
                const std::size_t k = rng.below(params.size());
                if (std::abs(grads[k]) < 1e-8) continue;  // relu off-kink guard
                const double saved = params[k];
                params[k] = saved + h;
                const double lp = batch_loss(m, batch);
                params[k] = saved - h;
                const double lm = batch_loss(m, batch);
                params[k] = saved;
                const double numeric = (lp - lm) / (2.0 * h);
                CHECK(std::abs(numeric - grads[k]) / std::abs(grads[k]) < 1e-5);
                ++checked;
            }
            CHECK(checked >= 20);
        }
    }
}

TEST_CASE("duplicated batch members leave the mean gradient unchanged") {
    const auto ds = synthetic_dataset(10, 13);
    const Mlp m = Mlp::create(1, {8}, Activation::Tanh, 15);
    std::vector<LabeledPair> single{ds.pairs[0]};
    std::vector<LabeledPair> doubled{ds.pairs[0], ds.pairs[0]};
    const auto g1 = flat_grads(grad_loss(m, single));
    const auto g2 = flat_grads(grad_loss(m, doubled));
    for (std::size_t k = 0; k < g1.size(); ++k)
        CHECK(g1[k] == doctest::Approx(g2[k]).epsilon(1e-15));
    CHECK_THROWS_AS(grad_loss(m, std::span<const LabeledPair>{}), invalid_input);
}

TEST_CASE("gradient vanishes as predictions approach the labels") {
    // drive the output toward 1 with a large final bias; with label 1 the
    // loss factor 2(h-1)h(1-h) goes to zero
    Mlp m = Mlp::create(1, {8}, Activation::Tanh, 17);
    m.biases.back()[0] = 20.0;
    const auto ds = synthetic_dataset(10, 19);
    std::vector<LabeledPair> batch{ds.pairs[0]};
    batch[0].label = 1;
    double norm = 0.0;
    for (double v : flat_grads(grad_loss(m, batch))) norm += v * v;
    CHECK(std::sqrt(norm) < 1e-7);
}

// =============================================================================
// training
// =============================================================================

TEST_CASE("zero epochs is a no-op") {
    const auto ds = synthetic_dataset(200, 21);
    const Mlp m = Mlp::create(1, {16}, Activation::Tanh, 23);
    TrainConfig cfg;
    cfg.epochs = 0;
    const TrainResult r = train(m, ds, cfg);
    CHECK(r.model.weights == m.weights);
    CHECK(r.model.biases == m.biases);
    const std::size_t n_train = ds.pairs.size() - ds.pairs.size() / 10;
    CHECK(r.train_risk ==
          doctest::Approx(batch_loss(m, std::span(ds.pairs.data(), n_train))).epsilon(1e-15));
}

TEST_CASE("training is deterministic per seed") {
    const auto ds = synthetic_dataset(500, 25);
    TrainConfig cfg;
    cfg.epochs = 5;
    cfg.seed = 77;
    const Mlp m = Mlp::create(1, {16}, Activation::Tanh, 27);
    const TrainResult a = train(m, ds, cfg);
    const TrainResult b = train(m, ds, cfg);
    REQUIRE(a.loss_curve.size() == b.loss_curve.size());
    for (std::size_t e = 0; e < a.loss_curve.size(); ++e)
        CHECK(a.loss_curve[e] == b.loss_curve[e]);
    CHECK(a.model.weights == b.model.weights);
}

TEST_CASE("training improves holdout risk and tracks the best epoch") {
    const auto ds = synthetic_dataset(2000, 29);
    TrainConfig cfg;
    cfg.epochs = 12;
    cfg.lr_decay_every = 6;
    cfg.seed = 31;
    const TrainResult r =
        train(Mlp::create(1, {32, 32}, Activation::Tanh, 33), ds, cfg);
    CHECK(r.holdout_curve[r.best_epoch] <= r.holdout_curve[0]);
    CHECK(r.holdout_risk < 0.25);  // better than the constant-1/2 classifier
}

TEST_CASE("divergence raises training_diverged") {
    // train to a low-risk state on separable labels, then continue with an
    // unstable momentum; velocities grow geometrically, predictions thrash,
    // and the epoch loss blows past 10x the initial risk
    PairDataset ds;
    ds.dimension = 1;
    ds.eta = 0.1;
    Rng rng(35);
    for (int i = 0; i < 400; ++i) {
        LabeledPair p;
        p.x = {rng.normal()};
        p.x_prime = {rng.normal() + (i % 2 ? 4.0 : -4.0)};
        p.label = (i % 2) ? 1 : 0;
        ds.pairs.push_back(std::move(p));
    }
    TrainConfig warm;
    warm.epochs = 4;
    warm.holdout_fraction = 0.0;
    warm.seed = 37;
    const TrainResult good = train(Mlp::create(1, {16}, Activation::Tanh, 39), ds, warm);
    CHECK(good.train_risk < 0.02);

    TrainConfig hot;
    hot.epochs = 10;
    hot.learning_rate = 100.0;
    hot.momentum = 1.2;
    hot.grad_clip = 0.0;
    hot.holdout_fraction = 0.0;
    hot.seed = 41;
    CHECK_THROWS_AS(train(good.model, ds, hot), training_diverged);
}

// =============================================================================
// oracle classifier
// =============================================================================

TEST_CASE("oracle equals 1/2 when the contrast matches the kernel slice") {
    const double eta = 0.1;
    const auto q = ContrastSpec::isotropic({0.0}, 1.0 - std::exp(-2.0 * eta));
    const auto h = oracle_classifier(kOu1, q, eta);
    for (double xp : {-1.0, 0.0, 2.0})
        CHECK(h({0.0}, {xp}) == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("oracle at ratio 3 gives 0.75") {
    const double eta = 0.1;
    const auto q = ContrastSpec::matched_ou(kOu1, eta);
    // locate x' with p*(1, x') = 3 q(x') and evaluate the oracle there
    const auto g = [&](double xp) {
        return transition_density_ou(kOu1, eta, {1.0}, {xp}) - 3.0 * q.density(Vec{xp});
    };
    const Vec roots = find_sign_changes(g, 0.0, 2.0, 4096);
    REQUIRE(!roots.empty());
    const auto h = oracle_classifier(kOu1, q, eta);
    CHECK(h({1.0}, {roots[0]}) == doctest::Approx(0.75).epsilon(1e-9));
}

TEST_CASE("oracle at the origin for the stationary contrast") {
    const double eta = 0.1;
    const auto q = ContrastSpec::matched_ou(kOu1, eta);
    const double p = transition_density_ou(kOu1, eta, {0.0}, {0.0});
    const double qv = q.density(Vec{0.0});
    const auto h = oracle_classifier(kOu1, q, eta);
    CHECK(h({0.0}, {0.0}) == doctest::Approx(p / (p + qv)).epsilon(1e-15));
    CHECK(h({0.0}, {0.0}) == doctest::Approx(0.70139).epsilon(1e-4));
    CHECK_THROWS_AS(
        oracle_classifier(PotentialSpec::named("quadratic-plus-logcosh", 1), q, eta),
        unsupported_error);
}

TEST_CASE("no classifier beats the oracle risk on a shared sample") {
    const double eta = 0.1;
    const auto q = ContrastSpec::matched_ou(kOu1, eta);
    const auto samples = make_pair_samples(kOu1, q, eta, 100000, 43);
    const MeanSe oracle_risk = population_risk_on(oracle_classifier(kOu1, q, eta), samples);

    const auto ds = synthetic_dataset(2000, 45);
    TrainConfig cfg;
    cfg.epochs = 10;
    cfg.seed = 47;
    const TrainResult tr = train(Mlp::create(1, {32, 32}, Activation::Tanh, 49), ds, cfg);
    const MeanSe trained_risk = population_risk_on(evaluator(tr.model), samples);
    const MeanSe random_risk = population_risk_on(
        evaluator(Mlp::create(1, {32, 32}, Activation::Tanh, 51)), samples);
    CHECK(oracle_risk.mean <=
          trained_risk.mean + 2.0 * std::sqrt(oracle_risk.se * oracle_risk.se +
                                              trained_risk.se * trained_risk.se));
    CHECK(oracle_risk.mean <= random_risk.mean + 2.0 * (oracle_risk.se + random_risk.se));
}

// =============================================================================
// serialization
// =============================================================================

TEST_CASE("model checkpoints round-trip bit-exactly") {
    const Mlp m = Mlp::create(2, {8, 4}, Activation::Relu, 53);
    const auto path = std::filesystem::temp_directory_path() / "nck-model-test.json";
    save_model_json(m, path.string());
    const Mlp back = load_model_json(path.string());
    CHECK(back.weights == m.weights);
    CHECK(back.biases == m.biases);
    CHECK(back.layer_sizes == m.layer_sizes);
    CHECK(back.activation == m.activation);
    CHECK(back.forward({0.3, -1.0}, {0.5, 0.2}) == m.forward({0.3, -1.0}, {0.5, 0.2}));
    CHECK(m.parameter_count() ==
          6 * 8 + 8 + 8 * 4 + 4 + 4 * 1 + 1);  // input width 3d = 6
    std::filesystem::remove(path);
}
