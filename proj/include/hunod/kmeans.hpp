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

namespace hunod::kmeans {

/// Per-feature weights encoding domain knowledge; applied inside the
/// clustering distance.
struct PonderVector {
    std::vector<double> weights;

    /// Validates length, non-negativity and the at-least-one-positive rule.
    void check(std::size_t dim) const;

    static PonderVector ones(std::size_t dim);
};

enum class InitMode {
    KMeansPlusPlus,  // default
    UniformBox       // random points in the bounding box of the data
};

struct KMeansConfig {
    std::size_t k = 10;
    std::size_t small_threshold = 0;  // instance count; 0 -> 5% of |D| (at least 1)
    std::size_t max_outliers = 0;     // instance count; 0 -> 5% of |D| (at least 1)
    std::size_t max_iters = 100;
    std::size_t n_init = 10;
    double tol = 1e-6;  // max centroid movement declaring convergence
    std::uint64_t seed = 0;
    InitMode init = InitMode::KMeansPlusPlus;

    std::size_t effective_small_threshold(std::size_t n) const;
    std::size_t effective_max_outliers(std::size_t n) const;
};

struct SmallCluster {
    std::size_t cluster = 0;
    double outlierness = 0.0;
    std::vector<std::size_t> members;  // row indices
};

struct ClusteringResult {
    std::vector<std::size_t> assignments;  // row -> cluster
    std::vector<std::vector<double>> centroids;
    std::vector<std::size_t> cluster_sizes;
    double wcss = 0.0;
    std::vector<SmallCluster> small_clusters;  // sorted: outlierness desc, index asc
};

/// sqrt(sum w_i^2 (p_i - q_i)^2).
double weighted_distance(std::span<const double> p, std::span<const double> q,
                         const PonderVector& w);

/// Multiplies column j by w_j; Euclidean distance on the result equals
/// weighted_distance on the input, which is what lets an unweighted Lloyd
/// loop serve the weighted detector.
std::vector<double> apply_ponders(const ScaledDataset& data, const PonderVector& w);

/// Lloyd iterations on a row-major matrix, best of n_init seeded restarts by
/// within-cluster sum of squares. Also classifies clusters small/large and
/// scores small clusters when at least one large cluster exists.
ClusteringResult cluster(const std::vector<double>& matrix, std::size_t n, std::size_t dim,
                         const KMeansConfig& cfg);

/// Min centroid-to-centroid Euclidean distance from a small cluster to any
/// large cluster.
double outlierness(std::span<const double> small_centroid,
                   const std::vector<std::vector<double>>& large_centroids);

/// Accumulates whole small clusters in descending outlierness while they fit
/// under the outlier budget; stops at the first cluster that does not fit.
OutlierSet select_outliers(const ClusteringResult& result, const KMeansConfig& cfg,
                           const std::vector<std::string>& ids);

/// Full detector: scale -> apply ponders -> cluster -> select.
OutlierSet detect(const Dataset& data, const PonderVector& w, const KMeansConfig& cfg);

}  // namespace hunod::kmeans
