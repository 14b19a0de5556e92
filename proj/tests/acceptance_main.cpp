// Acceptance suite: one pass/fail line per criterion, nonzero exit when any
// fails. Each criterion pins its tolerances in code.

#include <chrono>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>

#include "nck/io.hpp"
#include "nck/mixing.hpp"
#include "nck/parallel.hpp"
#include "nck/quadrature.hpp"
#include "nck/theory.hpp"

using namespace nck;
namespace fs = std::filesystem;

namespace {

const PotentialSpec kOu1 = PotentialSpec::quadratic_ou_1d(1.0);
const double kEta = 0.1;

struct Outcome {
    bool pass;
    std::string detail;
};

int g_failures = 0;

void run_criterion(int id, const std::string& name, const std::function<Outcome()>& body) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome out;
    try {
        out = body();
    } catch (const std::exception& e) {
        out = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("[%s] criterion %2d: %-28s (%6.1f s)  %s\n", out.pass ? "PASS" : "FAIL", id,
                name.c_str(), secs, out.detail.c_str());
    std::fflush(stdout);
    if (!out.pass) ++g_failures;
}

std::string fmt(const char* f, ...) {
    char buf[512];
    va_list args;
    va_start(args, f);
    std::vsnprintf(buf, sizeof buf, f, args);
    va_end(args);
    return buf;
}

double loglog_slope(const Vec& xs, const Vec& ys) {
    const double n = static_cast<double>(xs.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double lx = std::log(xs[i]), ly = std::log(ys[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

// ---------------------------------------------------------------------------

Outcome oracle_round_trip() {
    const auto contrast = ContrastSpec::matched_ou(kOu1, kEta);
    const auto kernel = extract_p_eta(oracle_classifier(kOu1, contrast, kEta), contrast, 1e-6);
    double max_err = 0.0;
    for (double x : linspace(-4.0, 4.0, 101))
        for (double xp : linspace(-4.0, 4.0, 101))
            max_err = std::max(max_err,
                               std::abs(kernel(Vec{x}, Vec{xp}) -
                                        transition_density_ou(kOu1, kEta, Vec{x}, Vec{xp})));
    const bool pass = max_err < 1e-10 && kernel.clamp_events() == 0;
    return {pass, fmt("max_abs_err=%.2e (tol 1e-10), clamps=%llu", max_err,
                      (unsigned long long)kernel.clamp_events())};
}

Outcome oracle_optimality() {
    const auto q = ContrastSpec::matched_ou(kOu1, kEta);
    const auto samples = make_pair_samples(kOu1, q, kEta, 1000000, derive_seed(7, "acc2-mc"));
    const MeanSe eps = epsilon_star_on(samples);

    double worst_margin = 1e300;
    int models = 0;
    auto probe = [&](const PairEvaluator& h) {
        const MeanSe risk = population_risk_on(h, samples);
        const double pooled = std::sqrt(risk.se * risk.se + eps.se * eps.se);
        worst_margin = std::min(worst_margin, risk.mean - (eps.mean - 3.0 * pooled));
        ++models;
    };

    for (int k = 0; k < 10; ++k)
        probe(evaluator(Mlp::create(1, {64, 64}, Activation::Tanh, derive_seed(11, "acc2-rand", k))));

    for (int k = 0; k < 20; ++k) {
        const auto traj =
            simulate_trajectory(kOu1, kEta, 400.0, derive_seed(13, "acc2-traj", k));
        const auto ds = build_pairs(traj, q, derive_seed(13, "acc2-pairs", k));
        TrainConfig cfg;
        cfg.epochs = 15;
        cfg.batch_size = 32;
        cfg.lr_decay_every = 5;
        cfg.seed = derive_seed(13, "acc2-train", k);
        const auto tr =
            train(Mlp::create(1, {64, 64}, Activation::Tanh, derive_seed(13, "acc2-init", k)),
                  ds, cfg);
        probe(evaluator(tr.model));
    }
    return {worst_margin >= 0.0,
            fmt("%d models, min margin over eps*-3SE = %.2e, eps*=%.6f", models, worst_margin,
                eps.mean)};
}

Outcome learnability() {
    const auto q = ContrastSpec::matched_ou(kOu1, kEta);
    const auto traj = simulate_trajectory(kOu1, kEta, 10000.0, derive_seed(17, "acc3-traj"));
    const auto ds = build_pairs(traj, q, derive_seed(17, "acc3-pairs"));
    if (ds.pairs.size() != 50000) return {false, "expected m = 50000"};

    TrainConfig cfg;  // the default recipe
    cfg.seed = derive_seed(17, "acc3-train");
    const auto tr = train(Mlp::create(1, {64, 64}, Activation::Tanh,
                                      derive_seed(17, "acc3-init")),
                          ds, cfg);

    const double eps_star = epsilon_star_quad(kOu1, q, kEta, TheoryQuad{256, 6.0});
    const double holdout_gap = std::abs(tr.holdout_risk - eps_star);

    const auto kernel = extract_p_eta(evaluator(tr.model), q, 1e-6);
    const double kl = kl_to_truth(kernel, kOu1, kEta, TheoryQuad{256, 6.0});

    // clamp rate over 1e5 random probes in the box
    kernel.reset_counters();
    Rng rng(derive_seed(17, "acc3-probes"));
    for (int k = 0; k < 100000; ++k)
        kernel(Vec{8.0 * rng.uniform() - 4.0}, Vec{8.0 * rng.uniform() - 4.0});
    const double clamp_rate =
        static_cast<double>(kernel.clamp_events()) / static_cast<double>(kernel.eval_count());

    const bool pass = holdout_gap < 0.02 && kl < 0.05 && clamp_rate < 0.01;
    return {pass, fmt("|holdout-eps*|=%.4f (tol .02), E_pi KL=%.4f (tol .05), clamp_rate=%.2e",
                      holdout_gap, kl, clamp_rate)};
}

Outcome kl_theorem_sweep() {
    const auto q = ContrastSpec::matched_ou(kOu1, kEta);
    const double box = 3.0;
    const CqResult cq = compute_cq_box(kOu1, q, kEta, box, 401);
    const TheoryQuad quad{256, box};
    bool all = true;
    std::string worst;
    for (double amp : {0.02, 0.05, 0.1, 0.15}) {
        const auto pk = make_perturbed_kernel(kOu1, kEta, {DeltaKind::SmoothBump, amp, 1.0, 0.5},
                                              7.0 / 6.0, true, box);
        if (pk.delta_max > 7.0 / 6.0) all = false;
        const auto rep =
            theorem_kl_check(pk.fn(), pk.delta_min, pk.delta_max, kOu1, q, kEta, quad, cq);
        if (!(rep.hypothesis_satisfied && rep.pass)) {
            all = false;
            worst = fmt("amp %.2f failed", amp);
        }
    }
    // quadrature convergence at one sweep point
    const auto pk = make_perturbed_kernel(kOu1, kEta, {DeltaKind::SmoothBump, 0.1, 1.0, 0.5},
                                          7.0 / 6.0, true, box);
    const double lhs_lo = kl_to_truth(pk.fn(), kOu1, kEta, TheoryQuad{256, box});
    const double lhs_hi = kl_to_truth(pk.fn(), kOu1, kEta, TheoryQuad{512, box});
    const double rel = std::abs(lhs_hi - lhs_lo) / std::abs(lhs_lo);
    PairEvaluator induced = [&](const Vec& x, const Vec& xp) {
        const double pv = pk(x, xp);
        return pv / (pv + q.density(xp));
    };
    const double et_lo = excess_risk_quad(induced, kOu1, q, kEta, TheoryQuad{256, box});
    const double et_hi = excess_risk_quad(induced, kOu1, q, kEta, TheoryQuad{512, box});
    const double rel_et = std::abs(et_hi - et_lo) / std::abs(et_lo);
    const bool conv = rel < 1e-6 && rel_et < 1e-6;
    return {all && conv,
            fmt("4 amplitudes pass=%d, node-doubling rel lhs=%.1e eps_tr=%.1e (tol 1e-6)%s%s",
                all, rel, rel_et, worst.empty() ? "" : "; ", worst.c_str())};
}

Outcome curvature_floor() {
    const auto q = ContrastSpec::matched_ou(kOu1, kEta);
    std::vector<Vec> grid;
    for (double v : linspace(-2.0, 2.0, 21)) grid.push_back(Vec{v});
    const Vec deltas = linspace(-0.5, 1.0 / 6.0, 14);
    const auto rep = curvature_check(kOu1, q, kEta, grid, grid, deltas);

    const double hand = curvature_rpp_fd(1.0, 1.0, 0.0);
    const bool hand_ok = std::abs(hand - 0.125) < 1e-6 && hand >= 0.0625;
    return {rep.pass && hand_ok,
            fmt("min r''=%.3e >= floor %.3e - 1e-6; hand value r''(0)=%.6f >= 1/16", rep.min_rpp,
                rep.floor, hand)};
}

Outcome orig_theorem_chain() {
    const auto q = ContrastSpec::matched_ou(kOu1, kEta);
    const double box = 1.0;
    bool all = true;
    Vec etas{0.05, 0.1, 0.2, 0.4}, t2s;
    for (double eta : etas) {
        const auto pk = make_perturbed_kernel(kOu1, eta, {DeltaKind::SmoothBump, 0.1, 1.0, 0.5},
                                              7.0 / 6.0, false, box);
        const auto rep = theorem_orig_check(pk.fn(), kOu1, q, eta, TheoryQuad{256, box});
        if (!rep.pass) all = false;
        t2s.push_back(rep.extra.at("t2"));
    }
    const double slope = loglog_slope(etas, t2s);
    const int d = 1;
    const bool slope_ok = slope >= -d - 0.3 * d && slope <= -d + 0.3 * d;
    return {all && slope_ok,
            fmt("lhs<=sqrt(2 eps_tr T2) at 4 etas=%d; T2 slope=%.3f in [-1.3, -0.7]", all,
                slope)};
}

Outcome kernel_bounds() {
    bool all = true;
    std::string cs;
    for (double eta : {0.05, 0.1, 0.2}) {
        const auto fit = kernel_bounds_fit(kOu1, eta, 4.0);
        all = all && fit.feasible;
        cs += fmt("eta %.2f: c=%.2f C=%.2f; ", eta, fit.c, fit.big_c);
    }
    return {all, cs};
}

Outcome mixing_bound() {
    // B cross-checked by quadrature of |x| pi(x), split at the kink
    const double b_quad = integrate_split(
        [](double x) {
            return std::abs(x) * stationary_density(kOu1, Vec{x});
        },
        -12.0, 12.0, 256, {0.0});
    const double b_closed = std::sqrt(2.0 / M_PI);
    const bool b_ok = std::abs(b_quad - b_closed) < 1e-6;

    const auto rep = mixing_bound_check(kOu1, {1.0, 1.5, 2.0, 2.5, 3.0, 4.0, 6.0, 8.0},
                                        linspace(-2.0, 2.0, 21), b_quad);
    return {b_ok && rep.all_ok,
            fmt("B_quad=%.8f vs sqrt(2/pi)=%.8f; 21x8 grid ok=%d worst margin=%.4f", b_quad,
                b_closed, rep.all_ok, rep.worst_margin)};
}

Outcome pair_mixing_identity() {
    Rng rng(derive_seed(23, "acc9"));
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const int n = 2 + static_cast<int>(rng.below(9));
        std::vector<double> p(static_cast<std::size_t>(n) * n);
        for (auto& v : p) v = rng.uniform() + 0.05;
        for (int i = 0; i < n; ++i) {
            double row = 0.0;
            for (int j = 0; j < n; ++j) row += p[i * n + j];
            for (int j = 0; j < n; ++j) p[i * n + j] /= row;
        }
        Vec qv(n);
        double qs = 0.0;
        for (auto& v : qv) {
            v = rng.uniform() + 0.05;
            qs += v;
        }
        for (auto& v : qv) v /= qs;
        const FiniteChain chain = FiniteChain::make(p, qv);
        for (int t = 1; t <= 10; ++t) {
            const auto r = beta_pair_exact(chain, t);
            worst = std::max(worst, std::abs(r.beta_points - r.beta_pairs));
        }
    }
    return {worst <= 1e-12, fmt("max |beta_points - beta_pairs| = %.2e over 100 chains x 10 lags",
                                worst)};
}

Outcome generalization_trend() {
    const auto q = ContrastSpec::matched_ou(kOu1, kEta);
    TrainConfig cfg;
    cfg.epochs = 40;
    cfg.holdout_fraction = 0.0;
    const auto table = generalization_gap_measure(kOu1, q, kEta, {100.0, 10000.0}, {64, 64},
                                                  Activation::Tanh, cfg, 5, 1000000,
                                                  derive_seed(29, "acc10"));
    const auto& small = table.rows[0];
    const auto& large = table.rows[1];
    const double pooled =
        std::sqrt(small.gap_se * small.gap_se + large.gap_se * large.gap_se);
    const bool trend = small.gap_mean - large.gap_mean >= 2.0 * pooled;

    // empirical Rademacher coefficient for the default class, then the
    // blocking-bound machinery
    const auto traj = simulate_trajectory(kOu1, kEta, 400.0, derive_seed(29, "acc10-rad"));
    auto data = std::make_shared<std::vector<LabeledPair>>(
        build_pairs(traj, q, derive_seed(29, "acc10-radp")).pairs);
    const std::size_t mu_data = 100;
    const double r_hat = empirical_rademacher(
        mlp_ascent_factory(1, {64, 64}, Activation::Tanh, data), mu_data, 5, 20, 200, 0.05,
        derive_seed(29, "acc10-sign"));
    const double k_proxy =
        r_hat * std::sqrt(static_cast<double>(mu_data) / std::log(static_cast<double>(mu_data)));

    GeneralizationConfig gcfg;
    gcfg.total_time = 1e5;
    gcfg.eta = kEta;
    gcfg.delta = 0.05;
    gcfg.k_proxy = k_proxy;
    gcfg.b_norm = std::sqrt(2.0 / M_PI);
    gcfg.delta_gen_target = 0.1;
    const auto mu = select_mu(gcfg, rademacher_curve(k_proxy), ou_beta_curve(gcfg.b_norm));
    const bool mu_ok = mu.feasible && mu.mu_star >= 2 && mu.mu_star <= mu.mu_max - 1 &&
                       std::isfinite(mu.recipe_mu) && mu.recipe_mu > 0.0;
    return {trend && mu_ok,
            fmt("gap(m=500)=%.4f+-%.4f vs gap(m=50000)=%.4f+-%.4f (2 pooled SE=%.4f); "
                "k=%.2f mu*=%d recipe_mu=%.1f",
                small.gap_mean, small.gap_se, large.gap_mean, large.gap_se, 2.0 * pooled,
                k_proxy, mu.mu_star, mu.recipe_mu)};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Outcome determinism() {
    const fs::path dir = fs::temp_directory_path() / "nck-acceptance-det";
    fs::remove_all(dir);
    fs::create_directories(dir);
    const fs::path cfg = dir / "cfg.json";
    {
        std::ofstream out(cfg);
        out << R"({
  "task": {"eta": 0.1, "total_time": 40.0, "seed": 7},
  "model": {"hidden": [8, 8], "train": {"epochs": 2}},
  "checks": {"quadrature_nodes": 64, "mc_samples": 20000, "cq_grid": 101,
             "bump_amplitudes": [0.05, 0.1], "eta_sweep": [0.1, 0.2],
             "kernel_bounds_etas": [0.1], "gen_t_grid": [20.0, 40.0],
             "gen_repeats": 5, "mixing_t_grid": [1.0, 2.0, 4.0],
             "mixing_x_count": 5}
})";
    }
    const std::vector<std::string> subs = {
        "simulate",  "build-dataset",        "train",       "extract",
        "check-kl",  "check-l1",             "check-mixing", "check-kernel-bounds",
        "check-generalization", "report"};
    for (const fs::path out : {dir / "run1", dir / "run2"}) {
        for (const auto& sub : subs) {
            const std::string cmd = std::string(NCK_CLI_PATH) + " --config " + cfg.string() +
                                    " --out " + out.string() + " " + sub + " > /dev/null 2>&1";
            if (std::system(cmd.c_str()) != 0)
                return {false, "subcommand failed: " + sub};
        }
    }
    int compared = 0;
    for (const auto& entry : fs::directory_iterator(dir / "run1")) {
        const auto name = entry.path().filename().string();
        if (name.rfind("manifest-", 0) == 0) continue;     // timestamps differ
        if (name == "config-resolved.json") continue;      // echoes the --out override
        if (slurp(entry.path()) != slurp(dir / "run2" / name))
            return {false, "byte mismatch in " + name};
        ++compared;
    }
    // a threaded rerun of the whole sequence must also match byte for byte
    for (const auto& sub : subs) {
        const std::string cmd = std::string(NCK_CLI_PATH) + " --config " + cfg.string() +
                                " --out " + (dir / "run4").string() + " --threads 4 " + sub +
                                " > /dev/null 2>&1";
        if (std::system(cmd.c_str()) != 0) return {false, "threaded subcommand failed: " + sub};
    }
    for (const auto& entry : fs::directory_iterator(dir / "run1")) {
        const auto name = entry.path().filename().string();
        if (name.rfind("manifest-", 0) == 0 || name == "config-resolved.json") continue;
        if (slurp(entry.path()) != slurp(dir / "run4" / name))
            return {false, "threaded mismatch in " + name};
    }
    return {true, fmt("%d files byte-identical across single-threaded runs; "
                      "4-thread rerun matches them all",
                      compared)};
}

}  // namespace

int main() {
    par::set_threads(4);
    std::printf("acceptance suite (version %s)\n", "0.1.0");

    run_criterion(1, "oracle round-trip", oracle_round_trip);
    run_criterion(2, "optimality of h*", oracle_optimality);
    run_criterion(3, "learnability at desk scale", learnability);
    run_criterion(4, "kl theorem inequality", kl_theorem_sweep);
    run_criterion(5, "curvature floor", curvature_floor);
    run_criterion(6, "l1 theorem chain", orig_theorem_chain);
    run_criterion(7, "kernel bounds fit", kernel_bounds);
    run_criterion(8, "mixing bound", mixing_bound);
    run_criterion(9, "pair-mixing identity", pair_mixing_identity);
    run_criterion(10, "generalization trend", generalization_trend);
    run_criterion(11, "engineering determinism", determinism);

    std::printf("%s: %d of 11 criteria passed\n", g_failures == 0 ? "OK" : "FAILURES",
                11 - g_failures);
    return g_failures;
}
