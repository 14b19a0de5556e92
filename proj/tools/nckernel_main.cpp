// Experiment runner: reproducible pipelines over the library, one
// subcommand per stage, machine-readable outputs plus a manifest.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

#include "nck/config.hpp"
#include "nck/errors.hpp"
#include "nck/io.hpp"
#include "nck/mixing.hpp"
#include "nck/parallel.hpp"
#include "nck/quadrature.hpp"
#include "nck/version.hpp"

namespace fs = std::filesystem;
using namespace nck;

namespace {

struct RunContext {
    ExperimentConfig cfg;
    fs::path out;
    std::vector<std::string> outputs;

    fs::path path(const std::string& name) {
        outputs.push_back(name);
        return out / name;
    }

    void finish(const std::string& subcommand) {
        Manifest m;
        m.config_hash = config_hash(cfg);
        m.master_seed = cfg.seed;
        m.version = kVersion;
        m.subcommand = subcommand;
        m.threads = cfg.threads;
        m.outputs = outputs;
        write_manifest(m, (out / ("manifest-" + subcommand + ".json")).string());
    }
};

RunContext make_context(const ExperimentConfig& cfg) {
    RunContext ctx;
    ctx.cfg = cfg;
    ctx.out = cfg.output_dir;
    fs::create_directories(ctx.out);
    std::ofstream echo(ctx.path("config-resolved.json"));
    echo << cfg.to_json().dump(2) << "\n";
    return ctx;
}

double fit_loglog_slope(const Vec& xs, const Vec& ys) {
    const std::size_t n = xs.size();
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double lx = std::log(xs[i]), ly = std::log(ys[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

void write_summary_row(std::ofstream& csv, const ExperimentConfig& cfg,
                       const TheoremReport& rep) {
    csv << rep.theorem << "," << config_hash(cfg) << "," << format_double(rep.lhs) << ","
        << format_double(rep.rhs) << "," << (rep.pass ? "true" : "false") << "\n";
}

int run_simulate(RunContext& ctx) {
    const auto spec = ctx.cfg.make_potential();
    // regularity sanity on the default box of 6 stationary standard deviations
    const double assume_r = 6.0 / std::sqrt(spec.rho);
    const int per_axis = spec.dimension == 1 ? 41 : 9;
    const auto assume =
        check_assumptions(spec, make_grid(assume_r, per_axis, spec.dimension));
    {
        nlohmann::json j;
        j["box_radius"] = assume_r;
        j["rho_ok"] = assume.rho_ok;
        j["l0_ok"] = assume.l0_ok;
        j["l1_ok"] = assume.l1_ok;
        j["growth_ok"] = assume.growth_ok;
        if (assume.first_violation) {
            j["first_violation"] = *assume.first_violation;
            j["violated_check"] = assume.violated_check;
        }
        std::ofstream out(ctx.path("assumptions.json"));
        out << j.dump(2) << "\n";
    }
    const auto traj = simulate_trajectory(spec, ctx.cfg.eta, ctx.cfg.total_time,
                                          derive_seed(ctx.cfg.seed, "trajectory"),
                                          ctx.cfg.substeps);
    write_trajectory_csv(traj, ctx.path("trajectory.csv").string());
    ctx.finish("simulate");
    return assume.all_ok() ? 0 : 1;
}

int run_build_dataset(RunContext& ctx) {
    const auto spec = ctx.cfg.make_potential();
    const auto contrast = ctx.cfg.make_contrast(spec);
    const auto traj = simulate_trajectory(spec, ctx.cfg.eta, ctx.cfg.total_time,
                                          derive_seed(ctx.cfg.seed, "trajectory"),
                                          ctx.cfg.substeps);
    const auto ds = build_pairs(traj, contrast, derive_seed(ctx.cfg.seed, "pairs"));
    write_pairs_csv(ds, ctx.path("pairs.csv").string());
    write_pairs_sidecar(ds, contrast.describe(), ctx.path("pairs.json").string());
    ctx.finish("build-dataset");
    return 0;
}

int run_train(RunContext& ctx) {
    const auto spec = ctx.cfg.make_potential();
    const auto contrast = ctx.cfg.make_contrast(spec);
    const auto traj = simulate_trajectory(spec, ctx.cfg.eta, ctx.cfg.total_time,
                                          derive_seed(ctx.cfg.seed, "trajectory"),
                                          ctx.cfg.substeps);
    const auto ds = build_pairs(traj, contrast, derive_seed(ctx.cfg.seed, "pairs"));
    Mlp proto = Mlp::create(spec.dimension, ctx.cfg.hidden, ctx.cfg.make_activation(),
                            derive_seed(ctx.cfg.seed, "init"));
    TrainConfig tc = ctx.cfg.train;
    tc.seed = derive_seed(ctx.cfg.seed, "train");
    const TrainResult result = train(std::move(proto), ds, tc);
    save_model_json(result.model, ctx.path("model.json").string());
    std::ofstream curve(ctx.path("loss-curve.csv"));
    curve << "epoch,train_loss,holdout_risk\n";
    for (std::size_t e = 0; e < result.loss_curve.size(); ++e)
        curve << e << "," << format_double(result.loss_curve[e]) << ","
              << format_double(result.holdout_curve[e]) << "\n";
    std::cout << "train_risk=" << result.train_risk
              << " holdout_risk=" << result.holdout_risk
              << " best_epoch=" << result.best_epoch << "\n";
    ctx.finish("train");
    return 0;
}

int run_extract(RunContext& ctx) {
    const auto spec = ctx.cfg.make_potential();
    const auto contrast = ctx.cfg.make_contrast(spec);
    const fs::path model_path = ctx.out / "model.json";
    if (!fs::exists(model_path)) {
        std::cerr << "extract: " << model_path << " not found; run `train` first\n";
        return 2;
    }
    const Mlp model = load_model_json(model_path.string());
    const KernelEstimate kernel =
        extract_p_eta(evaluator(model), contrast, ctx.cfg.clamp_epsilon);
    const Vec axis = linspace(-ctx.cfg.box_radius, ctx.cfg.box_radius, 101);
    write_kernel_grid_csv([&](const Vec& x, const Vec& xp) { return kernel(x, xp); }, axis,
                          axis, ctx.path("kernel-grid.csv").string());
    std::vector<Vec> probes;
    for (double x : linspace(-2.0, 2.0, 5)) probes.push_back(Vec{x});
    NormalizationReport norm;
    if (spec.dimension == 1) {
        norm = normalization_check([&](const Vec& x, const Vec& xp) { return kernel(x, xp); },
                                   probes, QuadratureSpec{ctx.cfg.quadrature_nodes, 10.0});
    } else {
        norm = normalization_check_mc(
            [&](const Vec& x, const Vec& xp) { return kernel(x, xp); }, contrast, probes,
            McSpec{ctx.cfg.mc_samples, derive_seed(ctx.cfg.seed, "norm-mc")});
    }
    nlohmann::json j;
    j["masses"] = norm.masses;
    j["max_abs_deviation"] = norm.max_abs_deviation;
    j["clamp_events"] = kernel.clamp_events();
    j["evals"] = kernel.eval_count();
    std::ofstream out(ctx.path("normalization.json"));
    out << j.dump(2) << "\n";
    ctx.finish("extract");
    return 0;
}

int run_check_kl(RunContext& ctx) {
    const auto spec = ctx.cfg.make_potential();
    const auto contrast = ctx.cfg.make_contrast(spec);
    const double eta = ctx.cfg.eta;
    const TheoryQuad quad{ctx.cfg.quadrature_nodes, ctx.cfg.kl_box_radius};
    const CqResult cq =
        compute_cq_box(spec, contrast, eta, ctx.cfg.kl_box_radius, ctx.cfg.cq_grid);

    std::ofstream csv(ctx.path("summary-kl.csv"));
    csv << "theorem,config_hash,lhs,rhs,pass\n";
    bool all_pass = true;
    int idx = 0;
    for (double amp : ctx.cfg.bump_amplitudes) {
        DeltaSpec d{DeltaKind::SmoothBump, amp, ctx.cfg.bump_center, ctx.cfg.bump_width};
        const PerturbedKernel pk = make_perturbed_kernel(spec, eta, d, 7.0 / 6.0, true,
                                                         ctx.cfg.kl_box_radius);
        TheoremReport rep =
            theorem_kl_check(pk.fn(), pk.delta_min, pk.delta_max, spec, contrast, eta, quad, cq);
        rep.extra["amplitude"] = amp;
        write_theorem_report(rep, ctx.path("theorem-kl-" + std::to_string(idx) + ".json").string());
        write_summary_row(csv, ctx.cfg, rep);
        if (rep.hypothesis_satisfied && !rep.pass) all_pass = false;
        ++idx;
    }

    // when a trained checkpoint is present, report its kernel too; the
    // delta-range hypothesis is measured, not assumed
    const fs::path model_path = ctx.out / "model.json";
    if (fs::exists(model_path)) {
        const Mlp model = load_model_json(model_path.string());
        const KernelEstimate trained =
            extract_p_eta(evaluator(model), contrast, ctx.cfg.clamp_epsilon);
        const KernelFn fn = [&](const Vec& x, const Vec& xp) { return trained(x, xp); };
        std::vector<Vec> grid;
        for (double v : linspace(-ctx.cfg.kl_box_radius, ctx.cfg.kl_box_radius, 81))
            grid.push_back(Vec{v});
        const DeltaRange dr = delta_min_max(fn, spec, eta, grid, grid);
        TheoremReport rep =
            theorem_kl_check(fn, dr.delta_min, dr.delta_max, spec, contrast, eta, quad, cq);
        rep.extra["clamp_events"] = static_cast<double>(trained.clamp_events());
        write_theorem_report(rep, ctx.path("theorem-kl-trained.json").string());
        write_summary_row(csv, ctx.cfg, rep);
        if (rep.hypothesis_satisfied && !rep.pass) all_pass = false;
    }
    ctx.finish("check-kl");
    if (!all_pass) {
        std::cerr << "check-kl: a hypothesis-satisfied configuration failed\n";
        return 1;
    }
    return 0;
}

int run_check_l1(RunContext& ctx) {
    const auto spec = ctx.cfg.make_potential();
    const auto contrast = ctx.cfg.make_contrast(spec);
    std::ofstream csv(ctx.path("summary-l1.csv"));
    csv << "theorem,config_hash,lhs,rhs,pass\n";
    bool all_pass = true;
    Vec etas, t2s;
    int idx = 0;
    for (double eta : ctx.cfg.eta_sweep) {
        const TheoryQuad quad{ctx.cfg.quadrature_nodes, ctx.cfg.orig_box_radius};
        DeltaSpec d{DeltaKind::SmoothBump, 0.1, ctx.cfg.bump_center, ctx.cfg.bump_width};
        const PerturbedKernel pk =
            make_perturbed_kernel(spec, eta, d, 7.0 / 6.0, false, ctx.cfg.orig_box_radius);
        TheoremReport rep = theorem_orig_check(pk.fn(), spec, contrast, eta, quad);
        write_theorem_report(rep,
                             ctx.path("theorem-orig-" + std::to_string(idx) + ".json").string());
        write_summary_row(csv, ctx.cfg, rep);
        etas.push_back(eta);
        t2s.push_back(rep.extra.at("t2"));
        if (!rep.pass) all_pass = false;
        ++idx;
    }
    nlohmann::json sweep;
    sweep["etas"] = etas;
    sweep["t2"] = t2s;
    sweep["t2_slope"] = fit_loglog_slope(etas, t2s);
    std::ofstream out(ctx.path("t2-sweep.json"));
    out << sweep.dump(2) << "\n";

    const fs::path model_path = ctx.out / "model.json";
    if (fs::exists(model_path)) {
        const Mlp model = load_model_json(model_path.string());
        const KernelEstimate trained =
            extract_p_eta(evaluator(model), contrast, ctx.cfg.clamp_epsilon);
        const KernelFn fn = [&](const Vec& x, const Vec& xp) { return trained(x, xp); };
        const TheoryQuad quad{ctx.cfg.quadrature_nodes, ctx.cfg.orig_box_radius};
        TheoremReport rep = theorem_orig_check(fn, spec, contrast, ctx.cfg.eta, quad);
        write_theorem_report(rep, ctx.path("theorem-orig-trained.json").string());
        write_summary_row(csv, ctx.cfg, rep);
        if (!rep.pass) all_pass = false;
    }
    ctx.finish("check-l1");
    if (!all_pass) {
        std::cerr << "check-l1: inequality failed at a sweep point\n";
        return 1;
    }
    return 0;
}

int run_check_mixing(RunContext& ctx) {
    const auto spec = ctx.cfg.make_potential();
    const ExpectedNormB b = expected_norm_b(spec, 100000, derive_seed(ctx.cfg.seed, "b-mc"));
    const Vec x_grid =
        linspace(-ctx.cfg.mixing_x_radius, ctx.cfg.mixing_x_radius, ctx.cfg.mixing_x_count);
    const MixingBoundReport rep =
        mixing_bound_check(spec, ctx.cfg.mixing_t_grid, x_grid, b.b_estimate);

    std::ofstream curve(ctx.path("beta-curve.csv"));
    curve << "t,beta,bound\n";
    for (double t : ctx.cfg.mixing_t_grid)
        curve << format_double(t) << "," << format_double(beta_point(spec, t)) << ","
              << format_double(std::min(1.0, b.b_estimate / std::sqrt(2.0 * M_PI * t))) << "\n";

    // exact pair-mixing identity on seeded random chains
    Rng rng(derive_seed(ctx.cfg.seed, "chains"));
    bool chains_ok = true;
    for (int trial = 0; trial < 20; ++trial) {
        const int n = 2 + static_cast<int>(rng.below(9));
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
        const FiniteChain chain = FiniteChain::make(p, q);
        for (int t = 1; t <= 5; ++t)
            if (!beta_pair_exact(chain, t).equal) chains_ok = false;
    }

    nlohmann::json j;
    j["b_estimate"] = b.b_estimate;
    j["b_bound"] = b.b_bound;
    j["b_bound_no_normalizer"] = b.b_bound_no_normalizer;
    j["bound_holds_everywhere"] = rep.all_ok;
    j["worst_margin"] = rep.worst_margin;
    j["pair_identity_ok"] = chains_ok;
    std::ofstream out(ctx.path("mixing-report.json"));
    out << j.dump(2) << "\n";
    ctx.finish("check-mixing");
    if (!rep.all_ok || !chains_ok) {
        std::cerr << "check-mixing: bound violated on the grid or pair identity failed\n";
        return 1;
    }
    return 0;
}

int run_check_generalization(RunContext& ctx) {
    const auto spec = ctx.cfg.make_potential();
    const auto contrast = ctx.cfg.make_contrast(spec);
    const GapTable table = generalization_gap_measure(
        spec, contrast, ctx.cfg.eta, ctx.cfg.gen_t_grid, ctx.cfg.hidden,
        ctx.cfg.make_activation(), ctx.cfg.train, ctx.cfg.gen_repeats, ctx.cfg.mc_samples,
        derive_seed(ctx.cfg.seed, "gap"));
    std::ofstream csv(ctx.path("gap-table.csv"));
    csv << "T,m,gap_mean,gap_se\n";
    for (const auto& row : table.rows)
        csv << format_double(row.total_time) << "," << row.m << ","
            << format_double(row.gap_mean) << "," << format_double(row.gap_se) << "\n";

    const ExpectedNormB b = expected_norm_b(spec, 100000, derive_seed(ctx.cfg.seed, "b-mc"));
    GeneralizationConfig gcfg;
    gcfg.total_time = ctx.cfg.mu_total_time;
    gcfg.eta = ctx.cfg.eta;
    gcfg.delta = ctx.cfg.mu_delta;
    gcfg.b_norm = b.b_estimate;
    gcfg.delta_gen_target = ctx.cfg.delta_gen_target;
    gcfg.k_proxy = 0.5;
    const SelectMuResult mu = select_mu(gcfg, rademacher_curve(gcfg.k_proxy),
                                        ou_beta_curve(gcfg.b_norm));
    nlohmann::json j;
    j["spearman_gap_vs_T"] = table.spearman_gap_vs_t;
    j["mu_star"] = mu.mu_star;
    j["bound_at_mu_star"] = mu.bound_at_mu_star;
    j["recipe_mu"] = mu.recipe_mu;
    j["mu_feasible"] = mu.feasible;
    std::ofstream out(ctx.path("generalization-report.json"));
    out << j.dump(2) << "\n";
    ctx.finish("check-generalization");
    if (!mu.feasible) {
        std::cerr << "check-generalization: no admissible mu\n";
        return 1;
    }
    return 0;
}

int run_check_kernel_bounds(RunContext& ctx) {
    const auto spec = ctx.cfg.make_potential();
    nlohmann::json j = nlohmann::json::array();
    bool all_feasible = true;
    for (double eta : ctx.cfg.kernel_bounds_etas) {
        const KernelBoundsFit fit = kernel_bounds_fit(spec, eta, ctx.cfg.box_radius);
        j.push_back({{"eta", eta}, {"c", fit.c}, {"C", fit.big_c}, {"feasible", fit.feasible}});
        all_feasible = all_feasible && fit.feasible;
    }
    std::ofstream out(ctx.path("kernel-bounds.json"));
    out << j.dump(2) << "\n";
    ctx.finish("check-kernel-bounds");
    if (!all_feasible) {
        std::cerr << "check-kernel-bounds: no feasible (c, C) at some eta\n";
        return 1;
    }
    return 0;
}

int run_report(RunContext& ctx) {
    std::ofstream csv(ctx.path("summary.csv"));
    csv << "theorem,config_hash,lhs,rhs,pass\n";
    std::ofstream txt(ctx.path("summary.txt"));
    txt << "nckernel report (version " << kVersion << ")\n";
    nlohmann::json aggregated = nlohmann::json::array();
    int count = 0;
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(ctx.out))
        if (entry.path().filename().string().rfind("theorem-", 0) == 0 &&
            entry.path().extension() == ".json")
            files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    for (const auto& path : files) {
        std::ifstream in(path);
        nlohmann::json j;
        in >> j;
        csv << j.at("theorem").get<std::string>() << "," << config_hash(ctx.cfg) << ","
            << format_double(j.at("lhs").get<double>()) << ","
            << format_double(j.at("rhs").get<double>()) << ","
            << (j.at("pass").get<bool>() ? "true" : "false") << "\n";
        txt << path.filename().string() << ": theorem=" << j.at("theorem").get<std::string>()
            << " lhs=" << j.at("lhs").get<double>() << " rhs=" << j.at("rhs").get<double>()
            << " pass=" << (j.at("pass").get<bool>() ? "yes" : "no") << "\n";
        aggregated.push_back(j);
        ++count;
    }
    txt << count << " theorem reports aggregated\n";
    if (ctx.cfg.output_format == "json") {
        std::ofstream jout(ctx.path("summary.json"));
        jout << aggregated.dump(2) << "\n";
    }
    ctx.finish("report");
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"contrastive transition-kernel learning experiments"};
    app.require_subcommand(1);

    std::string config_path, out_dir, format;
    std::uint64_t seed = 0;
    bool seed_set = false;
    int threads = 0;
    app.add_option("--config", config_path, "experiment config (JSON)");
    app.add_option("--out", out_dir, "output directory (overrides config)");
    app.add_option_function<std::uint64_t>(
           "--seed", [&](std::uint64_t s) { seed = s; seed_set = true; },
           "master seed (overrides config)");
    app.add_option("--threads", threads, "worker threads (default 1)");
    app.add_option("--format", format, "csv or json")
        ->check(CLI::IsMember({"csv", "json"}));

    static const std::vector<std::pair<std::string, int (*)(RunContext&)>> commands = {
        {"simulate", run_simulate},
        {"build-dataset", run_build_dataset},
        {"train", run_train},
        {"extract", run_extract},
        {"check-kl", run_check_kl},
        {"check-l1", run_check_l1},
        {"check-mixing", run_check_mixing},
        {"check-generalization", run_check_generalization},
        {"check-kernel-bounds", run_check_kernel_bounds},
        {"report", run_report}};
    for (const auto& [name, fn] : commands) app.add_subcommand(name);

    CLI11_PARSE(app, argc, argv);

    try {
        ExperimentConfig cfg;
        if (!config_path.empty()) cfg = ExperimentConfig::load(config_path);
        if (!out_dir.empty()) cfg.output_dir = out_dir;
        if (seed_set) cfg.seed = seed;
        if (threads > 0) cfg.threads = threads;
        if (!format.empty()) cfg.output_format = format;
        par::set_threads(cfg.threads);

        RunContext ctx = make_context(cfg);
        for (const auto& [name, fn] : commands)
            if (app.got_subcommand(name)) return fn(ctx);
        std::cerr << "no subcommand\n";
        return 2;
    } catch (const invalid_config& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
