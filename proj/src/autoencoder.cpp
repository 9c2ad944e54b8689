/*
 * SPDX-License-Identifier: Apache-2.0
 */
#include "hunod/autoencoder.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "hunod/csv.hpp"
#include "hunod/error.hpp"

namespace hunod::ae {

std::vector<std::size_t> AutoencoderConfig::layout_for(std::size_t d) const {
    if (!hidden_layout.empty()) return hidden_layout;
    const std::size_t half = (d + 1) / 2;
    const std::size_t quarter = (d + 3) / 4;
    return {half, quarter, half};
}

std::size_t NetworkModel::parameter_count() const {
    std::size_t n = 0;
    for (const auto& layer : layers) n += layer.weights.size() + layer.bias.size();
    return n;
}

NetworkModel init_model(std::size_t d, const AutoencoderConfig& cfg) {
    if (d == 0) throw_config("autoencoder input width must be positive");
    if (!(cfg.keep_prob > 0.0 && cfg.keep_prob <= 1.0))
        throw_config("keep probability must lie in (0, 1]");
    if (cfg.activity_reg < 0.0) throw_config("activity regularization must be non-negative");

    Rng rng(cfg.seed);
    NetworkModel model;
    std::size_t prev = d;
    auto add_layer = [&](std::size_t width, bool relu) {
        Layer layer;
        layer.in = prev;
        layer.out = width;
        layer.relu = relu;
        layer.bias.assign(width, 0.0);
        layer.weights.resize(width * prev);
        const double limit = std::sqrt(6.0 / static_cast<double>(prev));  // He-uniform
        for (double& w : layer.weights) w = rng.uniform(-limit, limit);
        model.layers.push_back(std::move(layer));
        prev = width;
    };
    for (std::size_t width : cfg.layout_for(d)) {
        if (width == 0) throw_config("hidden layer width must be positive");
        add_layer(width, true);
    }
    add_layer(d, false);
    return model;
}

ForwardResult forward(const NetworkModel& model, std::span<const double> p, Mode mode,
                      double keep_prob, Rng* rng) {
    if (p.size() != model.dim()) throw_data("forward: input width mismatch");
    const bool dropping = mode == Mode::Train && keep_prob < 1.0;
    if (dropping && rng == nullptr) throw_config("forward: dropout requires an rng");

    ForwardResult fr;
    std::vector<double> current(p.begin(), p.end());
    for (const auto& layer : model.layers) {
        std::vector<double> x(layer.out);
        for (std::size_t i = 0; i < layer.out; ++i) {
            double acc = layer.bias[i];
            const double* w = layer.weights.data() + i * layer.in;
            for (std::size_t j = 0; j < layer.in; ++j) acc += w[j] * current[j];
            x[i] = acc;
        }
        std::vector<double> y(layer.out);
        for (std::size_t i = 0; i < layer.out; ++i) y[i] = layer.relu ? std::max(0.0, x[i]) : x[i];

        std::vector<double> mask(layer.out, 1.0);
        if (dropping && layer.relu) {  // dropout follows each hidden activation only
            for (double& m : mask) m = rng->bernoulli(keep_prob) ? 1.0 / keep_prob : 0.0;
        }
        current.resize(layer.out);
        for (std::size_t i = 0; i < layer.out; ++i) current[i] = y[i] * mask[i];

        fr.preact.push_back(std::move(x));
        fr.activation.push_back(std::move(y));
        fr.mask.push_back(std::move(mask));
    }
    fr.reconstruction = fr.activation.back();
    return fr;
}

double reconstruction_error(const NetworkModel& model, std::span<const double> p) {
    const ForwardResult fr = forward(model, p, Mode::Infer, 1.0, nullptr);
    double err = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double diff = fr.reconstruction[i] - p[i];
        err += diff * diff;
    }
    return err;
}

namespace {

double activity_penalty(const ForwardResult& fr, std::size_t n_layers, bool penalize_output) {
    double s = 0.0;
    const std::size_t last = penalize_output ? n_layers : n_layers - 1;
    for (std::size_t l = 0; l < last; ++l)
        for (double y : fr.activation[l]) s += y * y;
    return s;
}

}  // namespace

double batch_loss(const NetworkModel& model, const std::vector<std::span<const double>>& batch,
                  double lambda, bool penalize_output) {
    if (batch.empty()) throw_data("batch_loss: empty batch");
    double mse_sum = 0.0, penalty = 0.0;
    for (const auto& p : batch) {
        const ForwardResult fr = forward(model, p, Mode::Infer, 1.0, nullptr);
        double err = 0.0;
        for (std::size_t i = 0; i < p.size(); ++i) {
            const double diff = fr.reconstruction[i] - p[i];
            err += diff * diff;
        }
        mse_sum += err;
        penalty += activity_penalty(fr, model.layers.size(), penalize_output);
    }
    return mse_sum / static_cast<double>(batch.size()) + lambda * penalty;
}

Gradients backward_batch(const NetworkModel& model,
                         const std::vector<std::span<const double>>& batch, double lambda,
                         bool penalize_output, double keep_prob, Rng* rng) {
    if (batch.empty()) throw_data("backward_batch: empty batch");
    const std::size_t n_layers = model.layers.size();
    Gradients grads;
    grads.weights.resize(n_layers);
    grads.bias.resize(n_layers);
    for (std::size_t l = 0; l < n_layers; ++l) {
        grads.weights[l].assign(model.layers[l].weights.size(), 0.0);
        grads.bias[l].assign(model.layers[l].bias.size(), 0.0);
    }

    const double inv_b = 1.0 / static_cast<double>(batch.size());
    const Mode mode = keep_prob < 1.0 ? Mode::Train : Mode::Infer;

    for (const auto& p : batch) {
        const ForwardResult fr = forward(model, p, mode, keep_prob, rng);

        double err = 0.0;
        for (std::size_t i = 0; i < p.size(); ++i) {
            const double diff = fr.reconstruction[i] - p[i];
            err += diff * diff;
        }
        grads.loss += err * inv_b;
        grads.loss += lambda * activity_penalty(fr, n_layers, penalize_output);

        // delta holds dL/dx for the layer being processed.
        std::vector<double> delta(model.layers.back().out);
        for (std::size_t i = 0; i < delta.size(); ++i) {
            delta[i] = 2.0 * (fr.reconstruction[i] - p[i]) * inv_b;
            if (penalize_output) delta[i] += 2.0 * lambda * fr.reconstruction[i];
        }

        for (std::size_t l = n_layers; l-- > 0;) {
            const Layer& layer = model.layers[l];
            // Input seen by this layer: masked activation of the previous
            // layer, or the instance itself for the first layer.
            std::vector<double> input;
            if (l == 0) {
                input.assign(p.begin(), p.end());
            } else {
                input.resize(model.layers[l - 1].out);
                for (std::size_t j = 0; j < input.size(); ++j)
                    input[j] = fr.activation[l - 1][j] * fr.mask[l - 1][j];
            }
            for (std::size_t i = 0; i < layer.out; ++i) {
                grads.bias[l][i] += delta[i];
                double* gw = grads.weights[l].data() + i * layer.in;
                for (std::size_t j = 0; j < layer.in; ++j) gw[j] += delta[i] * input[j];
            }
            if (l == 0) break;

            const Layer& prev = model.layers[l - 1];
            std::vector<double> next_delta(prev.out, 0.0);
            for (std::size_t i = 0; i < layer.out; ++i) {
                const double d = delta[i];
                const double* w = layer.weights.data() + i * layer.in;
                for (std::size_t j = 0; j < layer.in; ++j) next_delta[j] += w[j] * d;
            }
            for (std::size_t j = 0; j < prev.out; ++j) {
                double dy = next_delta[j] * fr.mask[l - 1][j];  // through the dropout scaling
                dy += 2.0 * lambda * fr.activation[l - 1][j];   // activity penalty on y
                next_delta[j] = fr.preact[l - 1][j] > 0.0 ? dy : 0.0;  // ReLU gate
            }
            delta = std::move(next_delta);
        }
    }
    return grads;
}

TrainingSelection select_training(const Dataset& data, const std::vector<double>& scores,
                                  double threshold, const OutlierSet& kmeans_outliers) {
    if (scores.size() != data.size())
        throw_data("select_training: scores not aligned with instances");
    TrainingSelection sel;
    for (std::size_t r = 0; r < data.size(); ++r) {
        if (scores[r] >= threshold)
            sel.training_ids.push_back(data.ids()[r]);
        else
            sel.rest_ids.push_back(data.ids()[r]);
    }
    if (sel.training_ids.empty())
        throw_data("training selection is empty: no instance reaches the score threshold");

    const std::set<std::string> t_set(sel.training_ids.begin(), sel.training_ids.end());
    const std::set<std::string> o_set = kmeans_outliers.id_set();
    const std::size_t inter = intersection_size(t_set, o_set);
    const std::size_t uni = t_set.size() + o_set.size() - inter;
    sel.c_t_jaccard = uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
    sel.v_t = static_cast<double>(inter) / static_cast<double>(t_set.size());
    return sel;
}

NetworkModel train(const Dataset& training_data, const AutoencoderConfig& cfg, TrainingLog* log) {
    const std::size_t n = training_data.size();
    const std::size_t d = training_data.dim();
    if (n == 0) throw_data("train: empty training set");

    NetworkModel model = init_model(d, cfg);
    Rng rng(cfg.seed + 0x9e3779b97f4a7c15ull);  // training stream, distinct from init

    // Adam state.
    const std::size_t n_layers = model.layers.size();
    std::vector<std::vector<double>> m_w(n_layers), v_w(n_layers), m_b(n_layers), v_b(n_layers);
    for (std::size_t l = 0; l < n_layers; ++l) {
        m_w[l].assign(model.layers[l].weights.size(), 0.0);
        v_w[l].assign(model.layers[l].weights.size(), 0.0);
        m_b[l].assign(model.layers[l].bias.size(), 0.0);
        v_b[l].assign(model.layers[l].bias.size(), 0.0);
    }
    std::size_t step = 0;
    auto adam_update = [&](std::vector<double>& param, const std::vector<double>& grad,
                           std::vector<double>& m, std::vector<double>& v) {
        const auto& a = cfg.adam;
        const double bc1 = 1.0 - std::pow(a.beta1, static_cast<double>(step));
        const double bc2 = 1.0 - std::pow(a.beta2, static_cast<double>(step));
        for (std::size_t i = 0; i < param.size(); ++i) {
            m[i] = a.beta1 * m[i] + (1.0 - a.beta1) * grad[i];
            v[i] = a.beta2 * v[i] + (1.0 - a.beta2) * grad[i] * grad[i];
            param[i] -= a.step * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + a.eps);
        }
    };

    const std::size_t batch = std::min<std::size_t>(std::max<std::size_t>(1, cfg.batch_size), n);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        rng.shuffle(order);
        double epoch_loss = 0.0;
        std::size_t n_batches = 0;
        for (std::size_t start = 0; start < n; start += batch) {
            const std::size_t stop = std::min(n, start + batch);
            std::vector<std::span<const double>> rows;
            rows.reserve(stop - start);
            for (std::size_t i = start; i < stop; ++i)
                rows.emplace_back(training_data.row(order[i]), d);
            Gradients grads = backward_batch(model, rows, cfg.activity_reg,
                                             cfg.penalize_output_layer, cfg.keep_prob, &rng);
            if (!std::isfinite(grads.loss))
                throw_numeric("autoencoder training diverged at epoch " + std::to_string(epoch) +
                              " (non-finite loss); lower the Adam step size");
            ++step;
            for (std::size_t l = 0; l < n_layers; ++l) {
                adam_update(model.layers[l].weights, grads.weights[l], m_w[l], v_w[l]);
                adam_update(model.layers[l].bias, grads.bias[l], m_b[l], v_b[l]);
            }
            epoch_loss += grads.loss;
            ++n_batches;
        }
        if (log) log->epoch_loss.push_back(epoch_loss / static_cast<double>(n_batches));
    }

    double max_err = 0.0;
    for (std::size_t r = 0; r < n; ++r)
        max_err = std::max(max_err,
                           reconstruction_error(model, std::span<const double>(training_data.row(r), d)));
    model.training_max_error = max_err;
    return model;
}

OutlierSet detect_outliers(const NetworkModel& model, const Dataset& rest) {
    if (model.training_max_error < 0.0) throw_config("detect_outliers: model is not trained");
    OutlierSet out;
    out.provenance = "autoencoder";
    const std::size_t d = rest.dim();
    for (std::size_t r = 0; r < rest.size(); ++r) {
        const double err = reconstruction_error(model, std::span<const double>(rest.row(r), d));
        if (err > model.training_max_error) out.entries.push_back({rest.ids()[r], err});
    }
    return out;
}

CrossCheckReport cross_check(const OutlierSet& ae_outliers, const OutlierSet& kmeans_outliers,
                             const TrainingSelection& selection) {
    CrossCheckReport report;
    report.c_t_jaccard = selection.c_t_jaccard;
    report.v_t = selection.v_t;
    const std::set<std::string> a_set = ae_outliers.id_set();
    const std::set<std::string> o_set = kmeans_outliers.id_set();
    const std::size_t inter = intersection_size(a_set, o_set);
    const std::size_t uni = a_set.size() + o_set.size() - inter;
    report.c_a_jaccard = uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
    report.v_o = a_set.empty() ? 0.0 : static_cast<double>(inter) / static_cast<double>(a_set.size());
    return report;
}

void NetworkModel::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw_data("cannot write model file '" + path + "'");
    out << "hunod-ae 1\n" << layers.size() << ' ' << csv::format_double(training_max_error)
        << '\n';
    for (const auto& layer : layers) {
        out << layer.in << ' ' << layer.out << ' ' << (layer.relu ? 1 : 0) << '\n';
        for (std::size_t i = 0; i < layer.weights.size(); ++i)
            out << csv::format_double(layer.weights[i]) << (i + 1 == layer.weights.size() ? '\n' : ' ');
        for (std::size_t i = 0; i < layer.bias.size(); ++i)
            out << csv::format_double(layer.bias[i]) << (i + 1 == layer.bias.size() ? '\n' : ' ');
    }
}

NetworkModel NetworkModel::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw_data("cannot open model file '" + path + "'");
    std::string magic;
    int version = 0;
    in >> magic >> version;
    if (magic != "hunod-ae" || version != 1) throw_data("unrecognized model file '" + path + "'");
    std::size_t n_layers = 0;
    NetworkModel model;
    in >> n_layers >> model.training_max_error;
    for (std::size_t l = 0; l < n_layers; ++l) {
        Layer layer;
        int relu = 0;
        in >> layer.in >> layer.out >> relu;
        layer.relu = relu != 0;
        layer.weights.resize(layer.in * layer.out);
        layer.bias.resize(layer.out);
        for (double& w : layer.weights) in >> w;
        for (double& b : layer.bias) in >> b;
        model.layers.push_back(std::move(layer));
    }
    if (!in) throw_data("truncated model file '" + path + "'");
    return model;
}

}  // namespace hunod::ae
