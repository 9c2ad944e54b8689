/*
 * SPDX-License-Identifier: Apache-2.0
 */
#pragma once

#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "hunod/data_model.hpp"
#include "hunod/outlier_set.hpp"

namespace hunod::surrogate {

enum class Impurity { Gini, Entropy };

/// Gini or base-2 entropy of a binary class distribution given the positive
/// fraction (0 log 0 := 0).
double impurity(double positive_fraction, Impurity measure);

struct LabeledDataset {
    const Dataset* base = nullptr;
    std::vector<int> labels;  // 1 = autoencoder outlier

    std::size_t size() const { return labels.size(); }
};

LabeledDataset label_dataset(const Dataset& data, const OutlierSet& ae_outliers);

struct TreeNode {
    // Internal node when feature >= 0: relational expression f > threshold,
    // false -> left, true -> right.
    int feature = -1;
    double threshold = 0.0;
    double gain = 0.0;
    std::size_t n_positive = 0, n_negative = 0;
    int leaf_class = 0;
    std::unique_ptr<TreeNode> left, right;

    bool is_leaf() const { return feature < 0; }
};

struct DecisionTree {
    std::unique_ptr<TreeNode> root;
    const FeatureSchema* schema = nullptr;
    std::size_t depth = 0;
    std::size_t node_count = 0;
};

struct TreeParams {
    Impurity measure = Impurity::Gini;
    std::size_t min_split = 2;
};

/// L(Q)P(Q) - L(Q1)P(Q1) - L(Q2)P(Q2), fractions taken against the full
/// dataset size.
double split_gain(std::size_t q_pos, std::size_t q_neg, std::size_t q1_pos, std::size_t q1_neg,
                  std::size_t total, Impurity measure);

/// Exact greedy CART: candidate thresholds at midpoints between consecutive
/// distinct feature values, split maximizing the gain, growth until purity,
/// min-split, or no positive-gain split. Ties: lowest feature index, then
/// lowest threshold.
DecisionTree build_tree(const LabeledDataset& data, const TreeParams& params = {});

struct Classification {
    int predicted = 0;
    std::vector<std::string> path;  // satisfied relational expressions, root to leaf
};

Classification classify(const DecisionTree& tree, std::span<const double> instance);

double accuracy(const DecisionTree& tree, const LabeledDataset& data);

/// Per-feature sums of split gains, normalized to total 1. Empty for a
/// single-leaf tree.
std::map<std::string, double> feature_importance(const DecisionTree& tree);

/// True iff two instances share identical feature vectors but different
/// labels (the case where training accuracy 1.0 is unattainable).
bool has_contradictory_duplicates(const LabeledDataset& data);

}  // namespace hunod::surrogate
