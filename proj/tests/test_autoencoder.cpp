/*
 * SPDX-License-Identifier: Apache-2.0
 */
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "hunod/autoencoder.hpp"
#include "hunod/error.hpp"
#include "hunod/rng.hpp"

using namespace hunod;

namespace {

Dataset random_dataset(Rng& rng, std::size_t n, std::size_t dim) {
    std::vector<std::string> ids, names;
    std::vector<double> values;
    for (std::size_t j = 0; j < dim; ++j) names.push_back("f" + std::to_string(j));
    for (std::size_t i = 0; i < n; ++i) {
        ids.push_back("p" + std::to_string(i));
        for (std::size_t j = 0; j < dim; ++j) values.push_back(rng.uniform(0.0, 1.0));
    }
    return Dataset(FeatureSchema::numeric(names), ids, values);
}

// Hand-built 2-2-2 network: one ReLU hidden layer, linear output.
ae::NetworkModel tiny_model() {
    ae::NetworkModel m;
    ae::Layer hidden;
    hidden.in = 2;
    hidden.out = 2;
    hidden.weights = {1.0, -1.0, 0.5, 0.5};
    hidden.bias = {0.0, -0.25};
    hidden.relu = true;
    ae::Layer out;
    out.in = 2;
    out.out = 2;
    out.weights = {1.0, 0.0, 0.0, 2.0};
    out.bias = {0.1, -0.1};
    out.relu = false;
    m.layers = {hidden, out};
    return m;
}

}  // namespace

TEST_CASE("default layout rounds the half and quarter widths up") {
    ae::AutoencoderConfig cfg;
    CHECK(cfg.layout_for(10) == std::vector<std::size_t>{5, 3, 5});
    CHECK(cfg.layout_for(7) == std::vector<std::size_t>{4, 2, 4});
    CHECK(cfg.layout_for(1) == std::vector<std::size_t>{1, 1, 1});
    cfg.hidden_layout = {8, 2};
    CHECK(cfg.layout_for(100) == std::vector<std::size_t>{8, 2});
}

TEST_CASE("forward pass worked example") {
    auto m = tiny_model();
    std::vector<double> p = {1.0, 0.5};
    auto fr = ae::forward(m, p, ae::Mode::Infer, 1.0, nullptr);

    // Hidden pre-activations: [1*1 - 1*0.5, 0.5*1 + 0.5*0.5 - 0.25] = [0.5, 0.5]
    CHECK(fr.preact[0][0] == doctest::Approx(0.5));
    CHECK(fr.preact[0][1] == doctest::Approx(0.5));
    // Output: [0.5 + 0.1, 2*0.5 - 0.1]
    REQUIRE(fr.reconstruction.size() == 2);
    CHECK(fr.reconstruction[0] == doctest::Approx(0.6));
    CHECK(fr.reconstruction[1] == doctest::Approx(0.9));

    // ReLU clamps a negative pre-activation.
    std::vector<double> q = {-1.0, 0.0};
    auto fr2 = ae::forward(m, q, ae::Mode::Infer, 1.0, nullptr);
    CHECK(fr2.preact[0][0] == doctest::Approx(-1.0));
    CHECK(fr2.activation[0][0] == 0.0);
}

TEST_CASE("inverted dropout masks scale kept units by 1/alpha") {
    auto m = tiny_model();
    std::vector<double> p = {1.0, 0.5};
    Rng rng(3);
    int kept = 0, dropped = 0;
    for (int i = 0; i < 200; ++i) {
        auto fr = ae::forward(m, p, ae::Mode::Train, 0.8, &rng);
        for (double f : fr.mask[0]) {
            CHECK((f == 0.0 || f == doctest::Approx(1.0 / 0.8)));
            (f == 0.0 ? dropped : kept) += 1;
        }
        // The output layer never gets a dropout mask.
        for (double f : fr.mask[1]) CHECK(f == 1.0);
    }
    CHECK(kept > 0);
    CHECK(dropped > 0);
    // Infer mode and alpha == 1 are both deterministic.
    auto fr = ae::forward(m, p, ae::Mode::Train, 1.0, &rng);
    for (double f : fr.mask[0]) CHECK(f == 1.0);
}

TEST_CASE("reconstruction error matches a direct computation") {
    auto m = tiny_model();
    std::vector<double> p = {1.0, 0.5};
    // Reconstruction is [0.6, 0.9]: E = 0.4^2 + 0.4^2
    CHECK(ae::reconstruction_error(m, p) == doctest::Approx(0.32));

    Rng rng(11);
    for (int i = 0; i < 50; ++i) {
        std::vector<double> q = {rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0)};
        auto fr = ae::forward(m, q, ae::Mode::Infer, 1.0, nullptr);
        double want = 0;
        for (int j = 0; j < 2; ++j)
            want += (q[j] - fr.reconstruction[j]) * (q[j] - fr.reconstruction[j]);
        CHECK(ae::reconstruction_error(m, q) == doctest::Approx(want).epsilon(1e-12));
    }
}

TEST_CASE("batch loss decomposes into mean error plus penalty") {
    auto m = tiny_model();
    std::vector<double> a = {1.0, 0.5}, b = {0.2, 0.8};
    std::vector<std::span<const double>> batch = {a, b};

    const double mean_err =
        0.5 * (ae::reconstruction_error(m, a) + ae::reconstruction_error(m, b));
    const double base = ae::batch_loss(m, batch, 0.0, true);
    CHECK(base == doctest::Approx(mean_err).epsilon(1e-12));

    // Doubling lambda doubles the penalty term exactly.
    const double l1 = ae::batch_loss(m, batch, 0.1, true) - base;
    const double l2 = ae::batch_loss(m, batch, 0.2, true) - base;
    CHECK(l2 == doctest::Approx(2.0 * l1).epsilon(1e-12));

    // The penalty is the summed squared activations over hidden and output.
    double penalty = 0;
    for (auto* p : {&a, &b}) {
        auto fr = ae::forward(m, *p, ae::Mode::Infer, 1.0, nullptr);
        for (const auto& layer : fr.activation)
            for (double y : layer) penalty += y * y;
    }
    CHECK(l1 == doctest::Approx(0.1 * penalty).epsilon(1e-9));

    // Excluding the output layer shrinks the penalty.
    CHECK(ae::batch_loss(m, batch, 0.1, false) < ae::batch_loss(m, batch, 0.1, true));
}

TEST_CASE("backprop gradients match central finite differences") {
    const std::size_t d = 6;
    ae::AutoencoderConfig cfg;
    cfg.hidden_layout = {3, 2, 3};
    cfg.seed = 42;
    auto model = ae::init_model(d, cfg);

    Rng rng(7);
    // Freshly initialized biases are zero, which can park a pre-activation
    // exactly on the ReLU kink where the derivative is undefined and the
    // finite difference straddles both branches. Jitter away from the kink.
    for (auto& layer : model.layers)
        for (double& b : layer.bias) b = rng.uniform(-0.3, 0.3);

    std::vector<std::vector<double>> rows;
    for (int i = 0; i < 4; ++i) {
        std::vector<double> row;
        for (std::size_t j = 0; j < d; ++j) row.push_back(rng.uniform(0.0, 1.0));
        rows.push_back(row);
    }
    std::vector<std::span<const double>> batch(rows.begin(), rows.end());

    for (double lambda : {0.0, 0.1}) {
        auto grads = ae::backward_batch(model, batch, lambda, true, 1.0, nullptr);
        const double h = 1e-5;
        double max_rel = 0.0;
        for (std::size_t l = 0; l < model.layers.size(); ++l) {
            auto check_param = [&](double& param, double grad) {
                const double save = param;
                param = save + h;
                const double up = ae::batch_loss(model, batch, lambda, true);
                param = save - h;
                const double down = ae::batch_loss(model, batch, lambda, true);
                param = save;
                const double numeric = (up - down) / (2.0 * h);
                const double denom = std::max({std::abs(numeric), std::abs(grad), 1e-8});
                max_rel = std::max(max_rel, std::abs(numeric - grad) / denom);
            };
            for (std::size_t i = 0; i < model.layers[l].weights.size(); ++i)
                check_param(model.layers[l].weights[i], grads.weights[l][i]);
            for (std::size_t i = 0; i < model.layers[l].bias.size(); ++i)
                check_param(model.layers[l].bias[i], grads.bias[l][i]);
        }
        CHECK(max_rel <= 1e-4);
    }
}

TEST_CASE("training reduces the loss and records the max training error") {
    Rng rng(99);
    Dataset data = random_dataset(rng, 64, 8);
    ae::AutoencoderConfig cfg;
    cfg.hidden_layout = {4, 2, 4};
    cfg.keep_prob = 1.0;
    cfg.activity_reg = 0.0;
    cfg.epochs = 60;
    cfg.seed = 5;

    ae::TrainingLog log;
    auto model = ae::train(data, cfg, &log);
    REQUIRE(log.epoch_loss.size() == 60);
    CHECK(log.epoch_loss.back() < log.epoch_loss.front());

    double max_err = 0;
    for (std::size_t r = 0; r < data.size(); ++r)
        max_err = std::max(max_err,
                           ae::reconstruction_error(model, std::span<const double>(data.row(r), 8)));
    CHECK(model.training_max_error == doctest::Approx(max_err).epsilon(1e-12));
}

TEST_CASE("zero epochs leave the initial weights untouched") {
    Rng rng(4);
    Dataset data = random_dataset(rng, 10, 5);
    ae::AutoencoderConfig cfg;
    cfg.epochs = 0;
    cfg.seed = 77;
    auto trained = ae::train(data, cfg);
    auto init = ae::init_model(5, cfg);
    for (std::size_t l = 0; l < trained.layers.size(); ++l) {
        CHECK(trained.layers[l].weights == init.layers[l].weights);
        CHECK(trained.layers[l].bias == init.layers[l].bias);
    }
    CHECK(trained.training_max_error >= 0.0);
}

TEST_CASE("training selection thresholds the scores") {
    Rng rng(12);
    Dataset data = random_dataset(rng, 3, 2);
    OutlierSet o;
    o.provenance = "kmeans";
    o.entries = {{"p2", 1.0}, {"p9", 1.0}};

    auto sel = ae::select_training(data, {0.4, 0.2, 0.35}, 0.3, o);
    CHECK(sel.training_ids == std::vector<std::string>{"p0", "p2"});
    CHECK(sel.rest_ids == std::vector<std::string>{"p1"});
    // T = {p0, p2}, O = {p2, p9}: jaccard 1/3, V_T 1/2.
    CHECK(sel.c_t_jaccard == doctest::Approx(1.0 / 3.0));
    CHECK(sel.v_t == doctest::Approx(0.5));

    CHECK_THROWS_AS(ae::select_training(data, {0.1, 0.1, 0.1}, 0.3, o), Error);
    CHECK_THROWS_AS(ae::select_training(data, {0.1, 0.1}, 0.3, o), Error);
}

TEST_CASE("detection threshold is strict") {
    auto m = tiny_model();
    std::vector<double> boundary = {1.0, 0.5};
    m.training_max_error = ae::reconstruction_error(m, boundary);  // exactly E([1, 0.5])

    std::vector<std::string> ids = {"at", "above"};
    std::vector<double> values = {1.0, 0.5, 10.0, 10.0};
    Dataset rest(FeatureSchema::numeric({"a", "b"}), ids, values);
    auto out = ae::detect_outliers(m, rest);
    CHECK_FALSE(out.contains("at"));  // E == M_err is not an outlier
    CHECK(out.contains("above"));
    CHECK(out.provenance == "autoencoder");
}

TEST_CASE("training instances are never flagged when scored against themselves") {
    Rng rng(21);
    Dataset data = random_dataset(rng, 40, 6);
    ae::AutoencoderConfig cfg;
    cfg.epochs = 10;
    cfg.seed = 3;
    auto model = ae::train(data, cfg);
    auto out = ae::detect_outliers(model, data);
    CHECK(out.size() == 0);
}

TEST_CASE("cross check statistics") {
    ae::TrainingSelection sel;
    sel.c_t_jaccard = 0.25;
    sel.v_t = 0.5;

    OutlierSet a;
    a.provenance = "autoencoder";
    a.entries = {{"1", 0.0}, {"2", 0.0}};
    OutlierSet o;
    o.provenance = "kmeans";
    o.entries = {{"2", 0.0}, {"3", 0.0}, {"4", 0.0}};

    auto cc = ae::cross_check(a, o, sel);
    CHECK(cc.c_t_jaccard == 0.25);
    CHECK(cc.v_t == 0.5);
    CHECK(cc.c_a_jaccard == doctest::Approx(0.25));
    CHECK(cc.v_o == doctest::Approx(0.5));

    OutlierSet empty;
    auto cc2 = ae::cross_check(empty, o, sel);
    CHECK(cc2.c_a_jaccard == 0.0);
    CHECK(cc2.v_o == 0.0);

    auto cc3 = ae::cross_check(a, a, sel);
    CHECK(cc3.c_a_jaccard == 1.0);
    CHECK(cc3.v_o == 1.0);
}

TEST_CASE("model save and load round trip") {
    Rng rng(64);
    Dataset data = random_dataset(rng, 16, 4);
    ae::AutoencoderConfig cfg;
    cfg.epochs = 5;
    cfg.seed = 8;
    auto model = ae::train(data, cfg);

    const std::string path = "ae_roundtrip_model.txt";
    model.save(path);
    auto loaded = ae::NetworkModel::load(path);
    std::remove(path.c_str());

    REQUIRE(loaded.layers.size() == model.layers.size());
    CHECK(loaded.training_max_error == model.training_max_error);
    for (std::size_t l = 0; l < model.layers.size(); ++l) {
        CHECK(loaded.layers[l].weights == model.layers[l].weights);
        CHECK(loaded.layers[l].bias == model.layers[l].bias);
        CHECK(loaded.layers[l].relu == model.layers[l].relu);
    }
}
