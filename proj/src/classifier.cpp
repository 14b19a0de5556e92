#include "nck/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include <json.hpp>

#include "nck/errors.hpp"

namespace nck {

namespace {

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

double act(double z, Activation a) { return a == Activation::Tanh ? std::tanh(z) : std::max(z, 0.0); }

double act_deriv(double preact, double post, Activation a) {
    return a == Activation::Tanh ? 1.0 - post * post : (preact > 0.0 ? 1.0 : 0.0);
}

// Per-layer forward pass writing activations (and preactivations for relu).
struct Workspace {
    std::vector<Vec> post;   // post[0] = input features
    std::vector<Vec> pre;    // preactivations per layer
};

void forward_into(const Mlp& m, std::span<const double> features, Workspace& ws) {
    const std::size_t layers = m.weights.size();
    ws.post.resize(layers + 1);
    ws.pre.resize(layers);
    ws.post[0].assign(features.begin(), features.end());
    for (std::size_t l = 0; l < layers; ++l) {
        const int in = m.layer_sizes[l], out = m.layer_sizes[l + 1];
        ws.pre[l].assign(out, 0.0);
        ws.post[l + 1].assign(out, 0.0);
        const Vec& w = m.weights[l];
        for (int o = 0; o < out; ++o) {
            double z = m.biases[l][o];
            const double* row = &w[static_cast<std::size_t>(o) * in];
            for (int i = 0; i < in; ++i) z += row[i] * ws.post[l][i];
            ws.pre[l][o] = z;
            ws.post[l + 1][o] = (l + 1 == layers) ? sigmoid(z) : act(z, m.activation);
        }
    }
}

// Backprop of dL/dh into parameter gradients, accumulated into g.
void backward_accumulate(const Mlp& m, const Workspace& ws, double dloss_dh, Gradients& g) {
    const std::size_t layers = m.weights.size();
    const double h = ws.post[layers][0];
    Vec delta{dloss_dh * h * (1.0 - h)};  // sigmoid derivative
    for (std::size_t l = layers; l-- > 0;) {
        const int in = m.layer_sizes[l], out = m.layer_sizes[l + 1];
        Vec next_delta(in, 0.0);
        for (int o = 0; o < out; ++o) {
            const double d = delta[o];
            g.biases[l][o] += d;
            double* grow = &g.weights[l][static_cast<std::size_t>(o) * in];
            const double* wrow = &m.weights[l][static_cast<std::size_t>(o) * in];
            for (int i = 0; i < in; ++i) {
                grow[i] += d * ws.post[l][i];
                next_delta[i] += d * wrow[i];
            }
        }
        if (l > 0) {
            for (int i = 0; i < in; ++i)
                next_delta[i] *= act_deriv(ws.pre[l - 1][i], ws.post[l][i], m.activation);
        }
        delta = std::move(next_delta);
    }
}

Gradients zero_gradients(const Mlp& m) {
    Gradients g;
    g.weights.resize(m.weights.size());
    g.biases.resize(m.biases.size());
    for (std::size_t l = 0; l < m.weights.size(); ++l) {
        g.weights[l].assign(m.weights[l].size(), 0.0);
        g.biases[l].assign(m.biases[l].size(), 0.0);
    }
    return g;
}

double empirical_risk(const Mlp& m, std::span<const LabeledPair> pairs) {
    if (pairs.empty()) return 0.0;
    double s = 0.0;
    for (const auto& p : pairs) s += l2_loss(m.forward(p.x, p.x_prime), p.label);
    return s / pairs.size();
}

}  // namespace

Vec pair_features(const Vec& x, const Vec& x_prime) {
    if (x.size() != x_prime.size()) throw invalid_input("pair_features: dimension mismatch");
    Vec f;
    f.reserve(3 * x.size());
    f.insert(f.end(), x.begin(), x.end());
    f.insert(f.end(), x_prime.begin(), x_prime.end());
    for (std::size_t i = 0; i < x.size(); ++i) f.push_back(x[i] - x_prime[i]);
    return f;
}

Mlp Mlp::create(int dimension, const std::vector<int>& hidden, Activation act,
                std::uint64_t seed) {
    Mlp m;
    m.dimension = dimension;
    m.activation = act;
    m.layer_sizes.push_back(3 * dimension);
    for (int h : hidden) m.layer_sizes.push_back(h);
    m.layer_sizes.push_back(1);
    Rng rng(seed);
    for (std::size_t l = 0; l + 1 < m.layer_sizes.size(); ++l) {
        const int in = m.layer_sizes[l], out = m.layer_sizes[l + 1];
        const double lim = std::sqrt(6.0 / (in + out));  // Glorot uniform
        Vec w(static_cast<std::size_t>(in) * out);
        for (auto& v : w) v = lim * (2.0 * rng.uniform() - 1.0);
        m.weights.push_back(std::move(w));
        m.biases.push_back(Vec(out, 0.0));
    }
    return m;
}

double Mlp::forward(const Vec& x, const Vec& x_prime) const {
    if (static_cast<int>(x.size()) != dimension ||
        static_cast<int>(x_prime.size()) != dimension)
        throw invalid_input("forward: dimension mismatch");
    return forward_features(pair_features(x, x_prime));
}

double Mlp::forward_features(std::span<const double> features) const {
    if (static_cast<int>(features.size()) != layer_sizes.front())
        throw invalid_input("forward: feature width mismatch");
    for (double v : features)
        if (!std::isfinite(v)) throw invalid_input("forward: non-finite input");
    thread_local Workspace ws;
    forward_into(*this, features, ws);
    return ws.post.back()[0];
}

std::size_t Mlp::parameter_count() const {
    std::size_t n = 0;
    for (std::size_t l = 0; l < weights.size(); ++l) n += weights[l].size() + biases[l].size();
    return n;
}

double l2_loss(double h, int label) {
    if (label != 0 && label != 1) throw invalid_input("l2_loss: label must be 0 or 1");
    const double r = h - label;
    return r * r;
}

Gradients grad_loss(const Mlp& model, std::span<const LabeledPair> batch) {
    if (batch.empty()) throw invalid_input("grad_loss: empty batch");
    Gradients g = zero_gradients(model);
    Workspace ws;
    const double inv = 1.0 / batch.size();
    for (const auto& p : batch) {
        const Vec f = pair_features(p.x, p.x_prime);
        forward_into(model, f, ws);
        const double h = ws.post.back()[0];
        g.batch_loss += (h - p.label) * (h - p.label) * inv;
        backward_accumulate(model, ws, 2.0 * (h - p.label) * inv, g);
    }
    return g;
}

Gradients grad_weighted_output(const Mlp& model, std::span<const LabeledPair> batch,
                               std::span<const double> coeffs) {
    if (batch.size() != coeffs.size())
        throw invalid_input("grad_weighted_output: size mismatch");
    Gradients g = zero_gradients(model);
    Workspace ws;
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const Vec f = pair_features(batch[i].x, batch[i].x_prime);
        forward_into(model, f, ws);
        backward_accumulate(model, ws, coeffs[i], g);
    }
    return g;
}

void axpy_params(Mlp& model, const Gradients& dir, double step) {
    for (std::size_t l = 0; l < model.weights.size(); ++l) {
        for (std::size_t k = 0; k < model.weights[l].size(); ++k)
            model.weights[l][k] += step * dir.weights[l][k];
        for (std::size_t k = 0; k < model.biases[l].size(); ++k)
            model.biases[l][k] += step * dir.biases[l][k];
    }
}

TrainResult train(Mlp model, const PairDataset& dataset, const TrainConfig& cfg) {
    if (dataset.pairs.empty()) throw invalid_input("train: empty dataset");
    if (cfg.holdout_fraction < 0.0 || cfg.holdout_fraction > 0.5)
        throw invalid_config("train: holdout_fraction must be in [0, 0.5]");
    if (cfg.learning_rate <= 0.0) throw invalid_config("train: learning_rate must be > 0");

    const std::size_t n = dataset.pairs.size();
    const std::size_t n_holdout = static_cast<std::size_t>(cfg.holdout_fraction * n);
    const std::size_t n_train = n - n_holdout;
    std::span<const LabeledPair> train_split(dataset.pairs.data(), n_train);
    std::span<const LabeledPair> holdout_split(dataset.pairs.data() + n_train, n_holdout);

    TrainResult result;
    result.loss_curve.reserve(cfg.epochs);
    result.holdout_curve.reserve(cfg.epochs);

    if (cfg.epochs == 0) {
        result.train_risk = empirical_risk(model, train_split);
        result.holdout_risk = n_holdout ? empirical_risk(model, holdout_split) : 0.0;
        result.best_epoch = 0;
        result.model = std::move(model);
        return result;
    }

    const double initial_risk = empirical_risk(model, train_split);
    Gradients vel = zero_gradients(model);
    Rng rng(cfg.seed);
    std::vector<std::size_t> order(n_train);
    for (std::size_t i = 0; i < n_train; ++i) order[i] = i;

    const int tail_start =
        cfg.tail_average_fraction > 0.0
            ? std::max(0, cfg.epochs - static_cast<int>(cfg.epochs * cfg.tail_average_fraction))
            : cfg.epochs;
    Mlp averaged = model;
    int averaged_count = 0;

    double lr = cfg.learning_rate;
    int diverged_streak = 0;
    std::vector<LabeledPair> batch;
    for (int ep = 0; ep < cfg.epochs; ++ep) {
        // Fisher-Yates shuffle
        for (std::size_t i = n_train - 1; i > 0; --i)
            std::swap(order[i], order[rng.below(i + 1)]);
        double epoch_loss = 0.0;
        std::size_t batches = 0;
        for (std::size_t k = 0; k < n_train; k += cfg.batch_size) {
            batch.clear();
            for (std::size_t j = k; j < std::min(n_train, k + cfg.batch_size); ++j)
                batch.push_back(dataset.pairs[order[j]]);
            Gradients g = grad_loss(model, batch);
            epoch_loss += g.batch_loss;  // pre-update loss, what the step saw
            // global l2 clip
            if (cfg.grad_clip > 0.0) {
                double sq = 0.0;
                for (const auto& w : g.weights)
                    for (double v : w) sq += v * v;
                for (const auto& b : g.biases)
                    for (double v : b) sq += v * v;
                const double norm = std::sqrt(sq);
                if (norm > cfg.grad_clip) {
                    const double scale = cfg.grad_clip / norm;
                    for (auto& w : g.weights)
                        for (double& v : w) v *= scale;
                    for (auto& b : g.biases)
                        for (double& v : b) v *= scale;
                }
            }
            for (std::size_t l = 0; l < model.weights.size(); ++l) {
                for (std::size_t j = 0; j < model.weights[l].size(); ++j) {
                    vel.weights[l][j] = cfg.momentum * vel.weights[l][j] - lr * g.weights[l][j];
                    model.weights[l][j] += vel.weights[l][j];
                }
                for (std::size_t j = 0; j < model.biases[l].size(); ++j) {
                    vel.biases[l][j] = cfg.momentum * vel.biases[l][j] - lr * g.biases[l][j];
                    model.biases[l][j] += vel.biases[l][j];
                }
            }
            ++batches;
        }
        epoch_loss /= batches;
        result.loss_curve.push_back(epoch_loss);
        result.holdout_curve.push_back(n_holdout ? empirical_risk(model, holdout_split)
                                                 : epoch_loss);

        if (epoch_loss > 10.0 * initial_risk) {
            if (++diverged_streak >= 3) throw training_diverged("train: loss diverged");
        } else {
            diverged_streak = 0;
        }

        if (ep >= tail_start) {
            ++averaged_count;
            const double w = 1.0 / averaged_count;
            for (std::size_t l = 0; l < model.weights.size(); ++l) {
                for (std::size_t j = 0; j < model.weights[l].size(); ++j)
                    averaged.weights[l][j] += w * (model.weights[l][j] - averaged.weights[l][j]);
                for (std::size_t j = 0; j < model.biases[l].size(); ++j)
                    averaged.biases[l][j] += w * (model.biases[l][j] - averaged.biases[l][j]);
            }
        }

        if ((ep + 1) % cfg.lr_decay_every == 0) lr *= cfg.lr_decay;
    }

    result.best_epoch = static_cast<int>(
        std::min_element(result.holdout_curve.begin(), result.holdout_curve.end()) -
        result.holdout_curve.begin());
    result.model = averaged_count > 0 ? std::move(averaged) : std::move(model);
    result.train_risk = empirical_risk(result.model, train_split);
    result.holdout_risk = n_holdout ? empirical_risk(result.model, holdout_split) : 0.0;
    return result;
}

PairEvaluator oracle_classifier(const PotentialSpec& spec, const ContrastSpec& contrast,
                                double eta) {
    if (!spec.is_ou()) throw unsupported_error("oracle_classifier: requires QuadraticOu");
    return [spec, contrast, eta](const Vec& x, const Vec& xp) {
        const double p = transition_density_ou(spec, eta, x, xp);
        const double q = contrast.density(xp);
        return p / (p + q);
    };
}

PairEvaluator evaluator(const Mlp& model) {
    return [model](const Vec& x, const Vec& xp) { return model.forward(x, xp); };
}

void save_model_json(const Mlp& model, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw invalid_input("save_model_json: cannot open " + path);
    char buf[64];
    auto num = [&](double v) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return std::string(buf);
    };
    out << "{\n  \"dimension\": " << model.dimension << ",\n  \"parameters\": "
        << model.parameter_count() << ",\n  \"activation\": \""
        << (model.activation == Activation::Tanh ? "tanh" : "relu") << "\",\n  \"layer_sizes\": [";
    for (std::size_t i = 0; i < model.layer_sizes.size(); ++i)
        out << (i ? ", " : "") << model.layer_sizes[i];
    out << "],\n  \"weights\": [";
    for (std::size_t l = 0; l < model.weights.size(); ++l) {
        out << (l ? ", " : "") << "[";
        for (std::size_t k = 0; k < model.weights[l].size(); ++k)
            out << (k ? ", " : "") << num(model.weights[l][k]);
        out << "]";
    }
    out << "],\n  \"biases\": [";
    for (std::size_t l = 0; l < model.biases.size(); ++l) {
        out << (l ? ", " : "") << "[";
        for (std::size_t k = 0; k < model.biases[l].size(); ++k)
            out << (k ? ", " : "") << num(model.biases[l][k]);
        out << "]";
    }
    out << "]\n}\n";
}

Mlp load_model_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw invalid_input("load_model_json: cannot open " + path);
    nlohmann::json j;
    in >> j;
    Mlp m;
    m.dimension = j.at("dimension").get<int>();
    (void)j.value("parameters", 0);  // informational
    m.activation = j.at("activation").get<std::string>() == "relu" ? Activation::Relu
                                                                   : Activation::Tanh;
    m.layer_sizes = j.at("layer_sizes").get<std::vector<int>>();
    for (const auto& w : j.at("weights")) m.weights.push_back(w.get<Vec>());
    for (const auto& b : j.at("biases")) m.biases.push_back(b.get<Vec>());
    if (m.weights.size() + 1 != m.layer_sizes.size())
        throw invalid_input("load_model_json: inconsistent layer structure");
    for (std::size_t l = 0; l < m.weights.size(); ++l) {
        const std::size_t in_w = m.layer_sizes[l], out_w = m.layer_sizes[l + 1];
        if (m.weights[l].size() != in_w * out_w || m.biases[l].size() != out_w)
            throw invalid_input("load_model_json: weight shape mismatch");
    }
    return m;
}

}  // namespace nck
