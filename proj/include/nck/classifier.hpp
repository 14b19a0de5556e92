#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "nck/contrast.hpp"
#include "nck/pairs.hpp"

namespace nck {

// Anything that maps a (x, x') pair to a probability.
using PairEvaluator = std::function<double(const Vec&, const Vec&)>;

enum class Activation { Tanh, Relu };

// Bounded-output MLP: input features are the concatenation (x, x', x - x'),
// hidden layers with tanh/relu, a final sigmoid keeps the output in (0, 1).
struct Mlp {
    int dimension = 1;                 // d of the state space; input width is 3d
    std::vector<int> layer_sizes;      // [3d, hidden..., 1]
    Activation activation = Activation::Tanh;
    std::vector<Vec> weights;          // weights[l]: row-major (out x in)
    std::vector<Vec> biases;

    static Mlp create(int dimension, const std::vector<int>& hidden, Activation act,
                      std::uint64_t seed);

    double forward(const Vec& x, const Vec& x_prime) const;
    double forward_features(std::span<const double> features) const;

    std::size_t parameter_count() const;
    int input_dim() const { return layer_sizes.front(); }
};

Vec pair_features(const Vec& x, const Vec& x_prime);

double l2_loss(double h, int label);

struct Gradients {
    std::vector<Vec> weights;
    std::vector<Vec> biases;
    double batch_loss = 0.0;  // mean loss at the evaluation point
};

// Exact gradient of the mean l2 loss over the batch.
Gradients grad_loss(const Mlp& model, std::span<const LabeledPair> batch);

// Gradient of sum_i c_i * h(pair_i); used by the Rademacher sign-ascent.
Gradients grad_weighted_output(const Mlp& model, std::span<const LabeledPair> batch,
                               std::span<const double> coeffs);

void axpy_params(Mlp& model, const Gradients& dir, double step);

struct TrainConfig {
    double learning_rate = 0.08;
    double lr_decay = 0.5;
    int lr_decay_every = 12;           // epochs
    double momentum = 0.9;
    int batch_size = 64;
    int epochs = 60;
    double holdout_fraction = 0.1;     // in [0, 0.5], split off the tail
    double grad_clip = 5.0;            // global l2 clip per minibatch
    double tail_average_fraction = 0.33;  // average iterates over the last epochs
    std::uint64_t seed = 1;
};

struct TrainResult {
    Mlp model;
    double train_risk;     // empirical risk of the returned model on the train split
    double holdout_risk;   // empirical risk on the holdout split
    Vec loss_curve;        // per-epoch mean minibatch loss
    Vec holdout_curve;     // per-epoch holdout risk
    int best_epoch;        // argmin of holdout_curve
};

// Minibatch SGD with momentum on the empirical risk; optional uniform
// averaging of end-of-epoch iterates over the tail of training. Throws
// training_diverged if the epoch loss exceeds 10x the initial loss three
// epochs in a row.
TrainResult train(Mlp model, const PairDataset& dataset, const TrainConfig& cfg);

// The population optimum h*(x, x') = p*(x,x') / (q(x') + p*(x,x')).
PairEvaluator oracle_classifier(const PotentialSpec& spec, const ContrastSpec& contrast,
                                double eta);

PairEvaluator evaluator(const Mlp& model);

void save_model_json(const Mlp& model, const std::string& path);
Mlp load_model_json(const std::string& path);

}  // namespace nck
