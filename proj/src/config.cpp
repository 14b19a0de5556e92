#include "nck/config.hpp"

#include <fstream>
#include <set>

#include "nck/errors.hpp"

namespace nck {

using nlohmann::json;

namespace {

void reject_unknown(const json& section, const std::set<std::string>& allowed,
                    const std::string& where) {
    for (auto it = section.begin(); it != section.end(); ++it)
        if (!allowed.count(it.key()))
            throw invalid_config("config: unknown key '" + where + "." + it.key() + "'");
}

template <class T>
void maybe(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

PotentialSpec ExperimentConfig::make_potential() const {
    if (potential_kind == "quadratic-ou")
        return PotentialSpec::quadratic_ou(theta, dimension);
    if (potential_kind == "named-test") return PotentialSpec::named(potential_name, dimension);
    throw invalid_config("config: potential.kind must be quadratic-ou or named-test");
}

ContrastSpec ExperimentConfig::make_contrast(const PotentialSpec& spec) const {
    if (contrast_kind == "matched-ou") return ContrastSpec::matched_ou(spec, eta);
    if (contrast_kind == "isotropic-gaussian")
        return ContrastSpec::isotropic(contrast_mean, contrast_variance);
    if (contrast_kind == "gaussian-mixture")
        return ContrastSpec::mixture(contrast_components, dimension);
    throw invalid_config("config: task.contrast.kind unknown: " + contrast_kind);
}

Activation ExperimentConfig::make_activation() const {
    if (activation == "tanh") return Activation::Tanh;
    if (activation == "relu") return Activation::Relu;
    throw invalid_config("config: model.activation must be tanh or relu");
}

json ExperimentConfig::to_json() const {
    json j;
    j["potential"] = {{"kind", potential_kind},
                      {"theta", theta},
                      {"dimension", dimension},
                      {"name", potential_name}};
    json contrast = {{"kind", contrast_kind},
                     {"mean", contrast_mean},
                     {"variance", contrast_variance}};
    json comps = json::array();
    for (const auto& c : contrast_components)
        comps.push_back({{"weight", c.weight}, {"mean", c.mean}, {"variance", c.variance}});
    contrast["components"] = comps;
    j["task"] = {{"eta", eta},
                 {"total_time", total_time},
                 {"seed", seed},
                 {"box_radius", box_radius},
                 {"substeps", substeps},
                 {"contrast", contrast}};
    j["model"] = {{"hidden", hidden},
                  {"activation", activation},
                  {"train",
                   {{"learning_rate", train.learning_rate},
                    {"lr_decay", train.lr_decay},
                    {"lr_decay_every", train.lr_decay_every},
                    {"momentum", train.momentum},
                    {"batch_size", train.batch_size},
                    {"epochs", train.epochs},
                    {"holdout_fraction", train.holdout_fraction},
                    {"grad_clip", train.grad_clip},
                    {"tail_average_fraction", train.tail_average_fraction}}}};
    j["checks"] = {{"quadrature_nodes", quadrature_nodes},
                   {"mc_samples", mc_samples},
                   {"cq_grid", cq_grid},
                   {"kl_box_radius", kl_box_radius},
                   {"orig_box_radius", orig_box_radius},
                   {"bump_amplitudes", bump_amplitudes},
                   {"eta_sweep", eta_sweep},
                   {"bump_center", bump_center},
                   {"bump_width", bump_width},
                   {"clamp_epsilon", clamp_epsilon},
                   {"mixing_t_grid", mixing_t_grid},
                   {"mixing_x_count", mixing_x_count},
                   {"mixing_x_radius", mixing_x_radius},
                   {"kernel_bounds_etas", kernel_bounds_etas},
                   {"gen_t_grid", gen_t_grid},
                   {"gen_repeats", gen_repeats},
                   {"mu_delta", mu_delta},
                   {"mu_total_time", mu_total_time},
                   {"delta_gen_target", delta_gen_target}};
    j["output"] = {{"directory", output_dir}, {"format", output_format}, {"threads", threads}};
    return j;
}

ExperimentConfig ExperimentConfig::from_json(const json& j) {
    ExperimentConfig cfg;
    reject_unknown(j, {"potential", "task", "model", "checks", "output"}, "<root>");
    if (j.contains("potential")) {
        const json& p = j.at("potential");
        reject_unknown(p, {"kind", "theta", "dimension", "name"}, "potential");
        maybe(p, "kind", cfg.potential_kind);
        maybe(p, "dimension", cfg.dimension);
        maybe(p, "name", cfg.potential_name);
        if (p.contains("theta")) {
            // accept a flat row-major list or a nested matrix
            const json& t = p.at("theta");
            cfg.theta.clear();
            if (!t.empty() && t.front().is_array()) {
                for (const auto& row : t)
                    for (const auto& v : row) cfg.theta.push_back(v.get<double>());
            } else {
                cfg.theta = t.get<std::vector<double>>();
            }
        }
    }
    if (j.contains("task")) {
        const json& t = j.at("task");
        reject_unknown(t, {"eta", "total_time", "seed", "box_radius", "substeps", "contrast"},
                       "task");
        maybe(t, "eta", cfg.eta);
        maybe(t, "total_time", cfg.total_time);
        maybe(t, "seed", cfg.seed);
        maybe(t, "box_radius", cfg.box_radius);
        maybe(t, "substeps", cfg.substeps);
        if (t.contains("contrast")) {
            const json& c = t.at("contrast");
            reject_unknown(c, {"kind", "mean", "variance", "components"}, "task.contrast");
            maybe(c, "kind", cfg.contrast_kind);
            maybe(c, "mean", cfg.contrast_mean);
            maybe(c, "variance", cfg.contrast_variance);
            if (c.contains("components")) {
                cfg.contrast_components.clear();
                for (const auto& comp : c.at("components")) {
                    reject_unknown(comp, {"weight", "mean", "variance"},
                                   "task.contrast.components[]");
                    GaussianComponent g;
                    g.weight = comp.at("weight").get<double>();
                    g.mean = comp.at("mean").get<Vec>();
                    g.variance = comp.at("variance").get<double>();
                    cfg.contrast_components.push_back(std::move(g));
                }
            }
        }
    }
    if (j.contains("model")) {
        const json& m = j.at("model");
        reject_unknown(m, {"hidden", "activation", "train"}, "model");
        maybe(m, "hidden", cfg.hidden);
        maybe(m, "activation", cfg.activation);
        if (m.contains("train")) {
            const json& t = m.at("train");
            reject_unknown(t,
                           {"learning_rate", "lr_decay", "lr_decay_every", "momentum",
                            "batch_size", "epochs", "holdout_fraction", "grad_clip",
                            "tail_average_fraction"},
                           "model.train");
            maybe(t, "learning_rate", cfg.train.learning_rate);
            maybe(t, "lr_decay", cfg.train.lr_decay);
            maybe(t, "lr_decay_every", cfg.train.lr_decay_every);
            maybe(t, "momentum", cfg.train.momentum);
            maybe(t, "batch_size", cfg.train.batch_size);
            maybe(t, "epochs", cfg.train.epochs);
            maybe(t, "holdout_fraction", cfg.train.holdout_fraction);
            maybe(t, "grad_clip", cfg.train.grad_clip);
            maybe(t, "tail_average_fraction", cfg.train.tail_average_fraction);
        }
    }
    if (j.contains("checks")) {
        const json& c = j.at("checks");
        reject_unknown(c,
                       {"quadrature_nodes", "mc_samples", "cq_grid", "kl_box_radius",
                        "orig_box_radius", "bump_amplitudes", "eta_sweep", "bump_center",
                        "bump_width", "clamp_epsilon", "mixing_t_grid", "mixing_x_count",
                        "mixing_x_radius", "kernel_bounds_etas", "gen_t_grid", "gen_repeats",
                        "mu_delta", "mu_total_time", "delta_gen_target"},
                       "checks");
        maybe(c, "quadrature_nodes", cfg.quadrature_nodes);
        maybe(c, "mc_samples", cfg.mc_samples);
        maybe(c, "cq_grid", cfg.cq_grid);
        maybe(c, "kl_box_radius", cfg.kl_box_radius);
        maybe(c, "orig_box_radius", cfg.orig_box_radius);
        maybe(c, "bump_amplitudes", cfg.bump_amplitudes);
        maybe(c, "eta_sweep", cfg.eta_sweep);
        maybe(c, "bump_center", cfg.bump_center);
        maybe(c, "bump_width", cfg.bump_width);
        maybe(c, "clamp_epsilon", cfg.clamp_epsilon);
        maybe(c, "mixing_t_grid", cfg.mixing_t_grid);
        maybe(c, "mixing_x_count", cfg.mixing_x_count);
        maybe(c, "mixing_x_radius", cfg.mixing_x_radius);
        maybe(c, "kernel_bounds_etas", cfg.kernel_bounds_etas);
        maybe(c, "gen_t_grid", cfg.gen_t_grid);
        maybe(c, "gen_repeats", cfg.gen_repeats);
        maybe(c, "mu_delta", cfg.mu_delta);
        maybe(c, "mu_total_time", cfg.mu_total_time);
        maybe(c, "delta_gen_target", cfg.delta_gen_target);
    }
    if (j.contains("output")) {
        const json& o = j.at("output");
        reject_unknown(o, {"directory", "format", "threads"}, "output");
        maybe(o, "directory", cfg.output_dir);
        maybe(o, "format", cfg.output_format);
        maybe(o, "threads", cfg.threads);
        if (cfg.output_format != "csv" && cfg.output_format != "json")
            throw invalid_config("config: output.format must be csv or json");
    }
    return cfg;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw invalid_config("config: cannot open " + path);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw invalid_config("config: parse error in " + path + ": " + e.what());
    }
    return from_json(j);
}

std::string config_hash(const ExperimentConfig& cfg) {
    // identifies the experiment: the output destination does not participate
    nlohmann::json j = cfg.to_json();
    j.erase("output");
    const std::string dump = j.dump();
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : dump) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace nck
