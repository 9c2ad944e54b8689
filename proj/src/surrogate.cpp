/*
 * SPDX-License-Identifier: Apache-2.0
 */
#include "hunod/surrogate.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "hunod/csv.hpp"
#include "hunod/error.hpp"

namespace hunod::surrogate {

double impurity(double positive_fraction, Impurity measure) {
    const double pos = positive_fraction, neg = 1.0 - positive_fraction;
    if (measure == Impurity::Gini) return pos * (1.0 - pos) + neg * (1.0 - neg);
    auto term = [](double p) { return p > 0.0 ? -p * std::log2(p) : 0.0; };
    return term(pos) + term(neg);
}

LabeledDataset label_dataset(const Dataset& data, const OutlierSet& ae_outliers) {
    const std::set<std::string> flagged = ae_outliers.id_set();
    for (const auto& id : flagged) {
        if (std::find(data.ids().begin(), data.ids().end(), id) == data.ids().end())
            throw_data("label_dataset: outlier id '" + id + "' not in dataset");
    }
    LabeledDataset out;
    out.base = &data;
    out.labels.reserve(data.size());
    for (const auto& id : data.ids()) out.labels.push_back(flagged.count(id) ? 1 : 0);
    return out;
}

double split_gain(std::size_t q_pos, std::size_t q_neg, std::size_t q1_pos, std::size_t q1_neg,
                  std::size_t total, Impurity measure) {
    const std::size_t q = q_pos + q_neg;
    const std::size_t q1 = q1_pos + q1_neg;
    const std::size_t q2 = q - q1;
    const std::size_t q2_pos = q_pos - q1_pos;
    auto weighted = [&](std::size_t n, std::size_t pos) {
        if (n == 0) return 0.0;
        const double frac = static_cast<double>(n) / static_cast<double>(total);
        return frac * impurity(static_cast<double>(pos) / static_cast<double>(n), measure);
    };
    return weighted(q, q_pos) - weighted(q1, q1_pos) - weighted(q2, q2_pos);
}

namespace {

struct Builder {
    const Dataset& data;
    const std::vector<int>& labels;
    TreeParams params;
    std::size_t total;
    std::size_t depth = 0;
    std::size_t nodes = 0;

    std::unique_ptr<TreeNode> grow(std::vector<std::size_t> rows, std::size_t level) {
        auto node = std::make_unique<TreeNode>();
        for (std::size_t r : rows) (labels[r] ? node->n_positive : node->n_negative)++;
        node->leaf_class = node->n_positive > node->n_negative ? 1 : 0;
        depth = std::max(depth, level);
        ++nodes;

        const bool pure = node->n_positive == 0 || node->n_negative == 0;
        if (pure || rows.size() < params.min_split) return node;

        int best_feature = -1;
        double best_threshold = 0.0, best_gain = 0.0;
        const std::size_t dim = data.dim();
        std::vector<std::size_t> order(rows);
        for (std::size_t f = 0; f < dim; ++f) {
            std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
                return data.at(a, f) < data.at(b, f);
            });
            std::size_t left_pos = 0, left_neg = 0;
            for (std::size_t i = 0; i + 1 < order.size(); ++i) {
                (labels[order[i]] ? left_pos : left_neg)++;
                const double v = data.at(order[i], f);
                const double next = data.at(order[i + 1], f);
                if (next <= v) continue;  // candidate only between distinct values
                const double threshold = v + 0.5 * (next - v);
                const double gain = split_gain(node->n_positive, node->n_negative, left_pos,
                                               left_neg, total, params.measure);
                // Candidates are visited in ascending (feature, threshold)
                // order, so strict improvement keeps the tie-break winner.
                if (gain > best_gain) {
                    best_gain = gain;
                    best_feature = static_cast<int>(f);
                    best_threshold = threshold;
                }
            }
        }
        if (best_feature < 0) return node;  // no positive-gain split exists

        std::vector<std::size_t> left_rows, right_rows;
        for (std::size_t r : rows) {
            if (data.at(r, static_cast<std::size_t>(best_feature)) > best_threshold)
                right_rows.push_back(r);
            else
                left_rows.push_back(r);
        }
        node->feature = best_feature;
        node->threshold = best_threshold;
        node->gain = best_gain;
        node->left = grow(std::move(left_rows), level + 1);
        node->right = grow(std::move(right_rows), level + 1);
        return node;
    }
};

}  // namespace

DecisionTree build_tree(const LabeledDataset& data, const TreeParams& params) {
    if (data.base == nullptr || data.size() == 0) throw_data("build_tree: empty dataset");
    Builder builder{*data.base, data.labels, params, data.size()};
    std::vector<std::size_t> rows(data.size());
    for (std::size_t r = 0; r < rows.size(); ++r) rows[r] = r;
    DecisionTree tree;
    tree.schema = &data.base->schema();
    tree.root = builder.grow(std::move(rows), 0);
    tree.depth = builder.depth;
    tree.node_count = builder.nodes;
    return tree;
}

Classification classify(const DecisionTree& tree, std::span<const double> instance) {
    Classification result;
    const TreeNode* node = tree.root.get();
    while (!node->is_leaf()) {
        const std::size_t f = static_cast<std::size_t>(node->feature);
        const bool satisfied = instance[f] > node->threshold;
        const std::string& name = tree.schema->names[f];
        result.path.push_back(name + (satisfied ? " > " : " <= ") +
                              csv::format_double(node->threshold));
        node = satisfied ? node->right.get() : node->left.get();
    }
    result.predicted = node->leaf_class;
    return result;
}

double accuracy(const DecisionTree& tree, const LabeledDataset& data) {
    if (data.size() == 0) throw_data("accuracy: empty dataset");
    std::size_t correct = 0;
    for (std::size_t r = 0; r < data.size(); ++r) {
        const auto c = classify(tree, std::span<const double>(data.base->row(r), data.base->dim()));
        if (c.predicted == data.labels[r]) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(data.size());
}

namespace {

void collect_gains(const TreeNode* node, const FeatureSchema& schema,
                   std::map<std::string, double>& sums, double& total) {
    if (node == nullptr || node->is_leaf()) return;
    sums[schema.names[static_cast<std::size_t>(node->feature)]] += node->gain;
    total += node->gain;
    collect_gains(node->left.get(), schema, sums, total);
    collect_gains(node->right.get(), schema, sums, total);
}

}  // namespace

std::map<std::string, double> feature_importance(const DecisionTree& tree) {
    std::map<std::string, double> sums;
    double total = 0.0;
    collect_gains(tree.root.get(), *tree.schema, sums, total);
    if (total > 0.0)
        for (auto& [name, v] : sums) v /= total;
    return sums;
}

bool has_contradictory_duplicates(const LabeledDataset& data) {
    const Dataset& base = *data.base;
    for (std::size_t a = 0; a < data.size(); ++a)
        for (std::size_t b = a + 1; b < data.size(); ++b) {
            if (data.labels[a] == data.labels[b]) continue;
            bool same = true;
            for (std::size_t c = 0; c < base.dim() && same; ++c)
                same = base.at(a, c) == base.at(b, c);
            if (same) return true;
        }
    return false;
}

}  // namespace hunod::surrogate
