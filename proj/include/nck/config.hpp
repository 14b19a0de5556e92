#pragma once

#include <json.hpp>

#include <cstdint>
#include <string>
#include <vector>

#include "nck/classifier.hpp"
#include "nck/contrast.hpp"
#include "nck/potential.hpp"

namespace nck {

// Fully-resolved experiment configuration. Every field has a default;
// unknown keys in the config file are a hard error.
struct ExperimentConfig {
    // potential
    std::string potential_kind = "quadratic-ou";  // or "named-test"
    std::vector<double> theta = {1.0};            // row-major d x d
    int dimension = 1;
    std::string potential_name = "quadratic-plus-logcosh";

    // task
    double eta = 0.1;
    double total_time = 1e4;
    std::uint64_t seed = 42;
    double box_radius = 4.0;
    int substeps = 100;
    std::string contrast_kind = "matched-ou";  // isotropic-gaussian | gaussian-mixture
    std::vector<double> contrast_mean = {0.0};
    double contrast_variance = 1.0;
    std::vector<GaussianComponent> contrast_components;

    // model
    std::vector<int> hidden = {64, 64};
    std::string activation = "tanh";
    TrainConfig train;

    // checks
    int quadrature_nodes = 256;
    std::size_t mc_samples = 1000000;
    int cq_grid = 401;
    double kl_box_radius = 3.0;
    double orig_box_radius = 1.0;
    std::vector<double> bump_amplitudes = {0.02, 0.05, 0.1, 0.15};
    std::vector<double> eta_sweep = {0.05, 0.1, 0.2, 0.4};
    double bump_center = 1.0;
    double bump_width = 0.5;
    double clamp_epsilon = 1e-6;
    std::vector<double> mixing_t_grid = {1.0, 1.5, 2.0, 2.5, 3.0, 4.0, 6.0, 8.0};
    int mixing_x_count = 21;
    double mixing_x_radius = 2.0;
    std::vector<double> kernel_bounds_etas = {0.05, 0.1, 0.2};
    std::vector<double> gen_t_grid = {100.0, 10000.0};
    int gen_repeats = 5;
    double mu_delta = 0.05;
    double mu_total_time = 1e5;
    double delta_gen_target = 0.1;

    // output
    std::string output_dir = "out";
    std::string output_format = "csv";  // csv | json
    int threads = 1;

    PotentialSpec make_potential() const;
    ContrastSpec make_contrast(const PotentialSpec& spec) const;
    Activation make_activation() const;

    nlohmann::json to_json() const;
    static ExperimentConfig from_json(const nlohmann::json& j);
    static ExperimentConfig load(const std::string& path);
};

// FNV-1a over the canonical resolved-config dump.
std::string config_hash(const ExperimentConfig& cfg);

}  // namespace nck
