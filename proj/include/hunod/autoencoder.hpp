/*
 * SPDX-License-Identifier: Apache-2.0
 */
#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "hunod/data_model.hpp"
#include "hunod/outlier_set.hpp"
#include "hunod/rng.hpp"

namespace hunod::ae {

struct AdamConfig {
    double step = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct AutoencoderConfig {
    std::vector<std::size_t> hidden_layout;  // empty -> ceil(d/2), ceil(d/4), ceil(d/2)
    double keep_prob = 0.8;                  // dropout keep probability (alpha)
    double activity_reg = 0.1;               // L2 activity factor (lambda)
    std::size_t epochs = 200;
    std::size_t batch_size = 32;
    AdamConfig adam;
    std::uint64_t seed = 0;
    // Eq-literal reading: the activity penalty covers the linear output layer
    // as well as the hidden layers. Switchable.
    bool penalize_output_layer = true;

    std::vector<std::size_t> layout_for(std::size_t d) const;
};

struct Layer {
    std::size_t in = 0, out = 0;
    std::vector<double> weights;  // out x in, row-major
    std::vector<double> bias;     // out
    bool relu = true;             // false -> linear (output layer)
};

struct NetworkModel {
    std::vector<Layer> layers;          // hidden layers then the linear output layer
    double training_max_error = -1.0;   // M_err; negative until trained

    std::size_t dim() const { return layers.empty() ? 0 : layers.front().in; }
    std::size_t parameter_count() const;

    void save(const std::string& path) const;
    static NetworkModel load(const std::string& path);
};

NetworkModel init_model(std::size_t d, const AutoencoderConfig& cfg);

enum class Mode { Train, Infer };

struct ForwardResult {
    // Per layer: pre-activation x, activation y (pre-dropout), dropout factor
    // (1/alpha kept, 0 dropped; all-ones in infer mode or alpha == 1).
    std::vector<std::vector<double>> preact;
    std::vector<std::vector<double>> activation;
    std::vector<std::vector<double>> mask;
    std::vector<double> reconstruction;
};

/// Train mode applies inverted dropout after each hidden activation; infer
/// mode is the plain deterministic network. rng may be null in infer mode.
ForwardResult forward(const NetworkModel& model, std::span<const double> p, Mode mode,
                      double keep_prob, Rng* rng);

/// E(p): squared L2 distance between input and inference reconstruction.
double reconstruction_error(const NetworkModel& model, std::span<const double> p);

/// Mean reconstruction error over the batch plus the activity penalty
/// (lambda times the summed squared activations, unaveraged). Evaluated with
/// the dropout factors fixed to all-ones, which makes it the deterministic
/// objective the gradient check differentiates.
double batch_loss(const NetworkModel& model, const std::vector<std::span<const double>>& batch,
                  double lambda, bool penalize_output);

struct Gradients {
    std::vector<std::vector<double>> weights;  // aligned with model.layers
    std::vector<std::vector<double>> bias;
    double loss = 0.0;
};

/// Backpropagation over one minibatch; dropout masks are drawn from rng when
/// keep_prob < 1 (pass nullptr with keep_prob == 1 for the deterministic path).
Gradients backward_batch(const NetworkModel& model,
                         const std::vector<std::span<const double>>& batch, double lambda,
                         bool penalize_output, double keep_prob, Rng* rng);

struct TrainingSelection {
    std::vector<std::string> training_ids;  // T: score >= t
    std::vector<std::string> rest_ids;      // P = D \ T
    double c_t_jaccard = 0.0;               // |T n O| / |T u O|
    double v_t = 0.0;                       // |T n O| / |T|
};

TrainingSelection select_training(const Dataset& data, const std::vector<double>& scores,
                                  double threshold, const OutlierSet& kmeans_outliers);

struct TrainingLog {
    std::vector<double> epoch_loss;
};

NetworkModel train(const Dataset& training_data, const AutoencoderConfig& cfg,
                   TrainingLog* log = nullptr);

/// A = { q : E(q) > M_err }, strict.
OutlierSet detect_outliers(const NetworkModel& model, const Dataset& rest);

struct CrossCheckReport {
    double c_t_jaccard = 0.0;
    double v_t = 0.0;
    double c_a_jaccard = 0.0;
    double v_o = 0.0;
};

CrossCheckReport cross_check(const OutlierSet& ae_outliers, const OutlierSet& kmeans_outliers,
                             const TrainingSelection& selection);

}  // namespace hunod::ae
