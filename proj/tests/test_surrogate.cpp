/*
 * SPDX-License-Identifier: Apache-2.0
 */
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>
#include <vector>

#include "hunod/rng.hpp"
#include "hunod/surrogate.hpp"

using namespace hunod;
using surrogate::Impurity;

namespace {

Dataset make_dataset(const std::vector<std::vector<double>>& rows, std::size_t dim) {
    std::vector<std::string> ids, names;
    std::vector<double> values;
    for (std::size_t j = 0; j < dim; ++j) names.push_back("f" + std::to_string(j));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        ids.push_back("p" + std::to_string(i));
        values.insert(values.end(), rows[i].begin(), rows[i].end());
    }
    return Dataset(FeatureSchema::numeric(names), ids, values);
}

surrogate::LabeledDataset labeled(const Dataset& d, std::vector<int> labels) {
    surrogate::LabeledDataset out;
    out.base = &d;
    out.labels = std::move(labels);
    return out;
}

// Independent impurity for the oracle.
double oracle_impurity(double p, Impurity m) {
    if (m == Impurity::Gini) return 2.0 * p * (1.0 - p);
    double h = 0.0;
    if (p > 0.0) h -= p * std::log2(p);
    if (p < 1.0) h -= (1.0 - p) * std::log2(1.0 - p);
    return h;
}

struct OracleSplit {
    bool found = false;
    int feature = -1;
    double threshold = 0.0;
    double gain = 0.0;
};

// Exhaustive scan over every feature and every midpoint threshold. Gains use
// the global dataset size as the probability denominator.
OracleSplit oracle_best_split(const Dataset& d, const std::vector<int>& labels,
                              const std::vector<std::size_t>& subset, std::size_t total,
                              Impurity m) {
    OracleSplit best;
    auto part_term = [&](const std::vector<std::size_t>& part) {
        if (part.empty()) return 0.0;
        std::size_t pos = 0;
        for (auto r : part) pos += labels[r] == 1;
        const double frac = static_cast<double>(part.size()) / static_cast<double>(total);
        return frac * oracle_impurity(static_cast<double>(pos) / part.size(), m);
    };
    const double parent = part_term(subset);
    for (std::size_t f = 0; f < d.dim(); ++f) {
        std::vector<double> vals;
        for (auto r : subset) vals.push_back(d.at(r, f));
        std::sort(vals.begin(), vals.end());
        vals.erase(std::unique(vals.begin(), vals.end()), vals.end());
        for (std::size_t i = 0; i + 1 < vals.size(); ++i) {
            const double thr = 0.5 * (vals[i] + vals[i + 1]);
            std::vector<std::size_t> left, right;
            for (auto r : subset) (d.at(r, f) > thr ? right : left).push_back(r);
            const double gain = parent - part_term(left) - part_term(right);
            // Candidates are visited in ascending (feature, threshold) order;
            // requiring strict improvement therefore keeps the tie-break
            // winner, and starting from gain 0 keeps only positive gains.
            if (gain > best.gain) best = {true, static_cast<int>(f), thr, gain};
        }
    }
    return best;
}

double oracle_accuracy(const Dataset& d, const std::vector<int>& labels,
                       std::vector<std::size_t> subset, std::size_t total, Impurity m,
                       std::size_t min_split) {
    std::size_t pos = 0;
    for (auto r : subset) pos += labels[r] == 1;
    const bool pure = pos == 0 || pos == subset.size();
    OracleSplit split;
    if (!pure && subset.size() >= min_split)
        split = oracle_best_split(d, labels, subset, total, m);
    if (!split.found) {
        // Majority leaf; ties predict the negative class.
        const int cls = 2 * pos > subset.size() ? 1 : 0;
        std::size_t hits = 0;
        for (auto r : subset) hits += labels[r] == cls;
        return static_cast<double>(hits);
    }
    std::vector<std::size_t> left, right;
    for (auto r : subset)
        (d.at(r, static_cast<std::size_t>(split.feature)) > split.threshold ? right : left)
            .push_back(r);
    return oracle_accuracy(d, labels, left, total, m, min_split) +
           oracle_accuracy(d, labels, right, total, m, min_split);
}

}  // namespace

TEST_CASE("impurity worked examples") {
    CHECK(surrogate::impurity(0.5, Impurity::Gini) == doctest::Approx(0.5));
    CHECK(surrogate::impurity(0.5, Impurity::Entropy) == doctest::Approx(1.0));
    CHECK(surrogate::impurity(0.25, Impurity::Gini) == doctest::Approx(0.375));
    CHECK(surrogate::impurity(0.0, Impurity::Gini) == 0.0);
    CHECK(surrogate::impurity(1.0, Impurity::Entropy) == 0.0);  // 0 log 0 := 0
}

TEST_CASE("split gain worked example") {
    // 4 instances, 2/2, split into two pure halves: 1*0.5 - 0 - 0.
    CHECK(surrogate::split_gain(2, 2, 2, 0, 4, Impurity::Gini) == doctest::Approx(0.5));
    // No separation: both halves keep the 50/50 mix.
    CHECK(surrogate::split_gain(2, 2, 1, 1, 4, Impurity::Gini) == doctest::Approx(0.0));
}

TEST_CASE("a linearly separable set yields a depth-one tree") {
    Dataset d = make_dataset({{1.0}, {2.0}, {5.0}, {6.0}}, 1);
    auto tree = surrogate::build_tree(labeled(d, {0, 0, 1, 1}));
    REQUIRE(tree.root);
    CHECK_FALSE(tree.root->is_leaf());
    CHECK(tree.root->feature == 0);
    CHECK(tree.root->threshold == doctest::Approx(3.5));
    CHECK(tree.depth == 1);
    CHECK(surrogate::accuracy(tree, labeled(d, {0, 0, 1, 1})) == 1.0);
}

TEST_CASE("a pure dataset is a single leaf") {
    Dataset d = make_dataset({{1.0}, {2.0}, {3.0}}, 1);
    auto tree = surrogate::build_tree(labeled(d, {0, 0, 0}));
    CHECK(tree.root->is_leaf());
    CHECK(tree.root->leaf_class == 0);
    CHECK(tree.depth == 0);
    CHECK(surrogate::feature_importance(tree).empty());
}

TEST_CASE("classification paths list the satisfied comparisons") {
    Dataset d = make_dataset({{1.0, 10.0}, {2.0, 20.0}, {5.0, 10.0}, {6.0, 20.0}}, 2);
    auto tree = surrogate::build_tree(labeled(d, {0, 0, 1, 1}));
    std::vector<double> instance = {5.5, 0.0};
    auto c = surrogate::classify(tree, instance);
    CHECK(c.predicted == 1);
    REQUIRE(c.path.size() == 1);
    CHECK(c.path[0] == "f0 > 3.5");
    std::vector<double> other = {1.5, 0.0};
    CHECK(surrogate::classify(tree, other).path[0] == "f0 <= 3.5");
}

TEST_CASE("training accuracy with an impossible instance mix") {
    // Identical feature vectors with conflicting labels cap the accuracy.
    Dataset d = make_dataset({{1.0}, {1.0}, {2.0}, {3.0}}, 1);
    auto data = labeled(d, {0, 1, 1, 1});
    CHECK(surrogate::has_contradictory_duplicates(data));
    auto tree = surrogate::build_tree(data);
    CHECK(surrogate::accuracy(tree, data) == doctest::Approx(0.75));

    auto clean = labeled(d, {0, 0, 1, 1});
    CHECK_FALSE(surrogate::has_contradictory_duplicates(clean));
}

TEST_CASE("feature importance sums to one and favors the splitting feature") {
    Dataset d = make_dataset({{1.0, 7.0}, {2.0, 7.0}, {5.0, 7.0}, {6.0, 7.0}}, 2);
    auto tree = surrogate::build_tree(labeled(d, {0, 0, 1, 1}));
    auto imp = surrogate::feature_importance(tree);
    REQUIRE(imp.count("f0") == 1);
    CHECK(imp.at("f0") == doctest::Approx(1.0));
    CHECK(imp.count("f1") == 0);
}

TEST_CASE("greedy construction matches the exhaustive oracle on random datasets") {
    Rng rng(314159);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t n = 4 + rng.uniform_index(17);   // up to 20 instances
        const std::size_t dim = 1 + rng.uniform_index(3);  // up to 3 features
        const Impurity m = trial % 2 ? Impurity::Entropy : Impurity::Gini;

        std::vector<std::vector<double>> rows;
        std::vector<int> labels;
        for (std::size_t i = 0; i < n; ++i) {
            std::vector<double> row;
            for (std::size_t j = 0; j < dim; ++j)
                row.push_back(static_cast<double>(rng.uniform_index(6)));  // repeated values
            rows.push_back(row);
            labels.push_back(rng.bernoulli(0.4) ? 1 : 0);
        }
        Dataset d = make_dataset(rows, dim);
        surrogate::TreeParams params;
        params.measure = m;
        auto tree = surrogate::build_tree(labeled(d, labels), params);

        std::vector<std::size_t> all(n);
        for (std::size_t i = 0; i < n; ++i) all[i] = i;
        auto root = oracle_best_split(d, labels, all, n, m);

        if (root.found) {
            REQUIRE_FALSE(tree.root->is_leaf());
            CHECK(tree.root->feature == root.feature);
            CHECK(std::abs(tree.root->threshold - root.threshold) <= 1e-12);
            CHECK(std::abs(tree.root->gain - root.gain) <= 1e-12);
        } else {
            CHECK(tree.root->is_leaf());
        }

        const double want =
            oracle_accuracy(d, labels, all, n, m, params.min_split) / static_cast<double>(n);
        CHECK(surrogate::accuracy(tree, labeled(d, labels)) == doctest::Approx(want));
    }
}

TEST_CASE("clean labels are always fit exactly") {
    // Without contradictory duplicates the unbounded greedy tree reaches
    // accuracy 1 whenever every conflict is resolvable by some split.
    Rng rng(271828);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t n = 6 + rng.uniform_index(15);
        std::vector<std::vector<double>> rows;
        std::vector<int> labels;
        std::set<std::vector<double>> seen;
        for (std::size_t i = 0; i < n; ++i) {
            std::vector<double> row = {rng.uniform(0.0, 1.0), rng.uniform(0.0, 1.0)};
            if (!seen.insert(row).second) continue;  // distinct vectors only
            rows.push_back(row);
            labels.push_back(rng.bernoulli(0.5) ? 1 : 0);
        }
        Dataset d = make_dataset(rows, 2);
        auto data = labeled(d, labels);
        auto tree = surrogate::build_tree(data);
        CHECK(surrogate::accuracy(tree, data) == 1.0);
    }
}
