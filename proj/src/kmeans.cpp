/*
 * SPDX-License-Identifier: Apache-2.0
 */
#include "hunod/kmeans.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "hunod/error.hpp"
#include "hunod/rng.hpp"

namespace hunod::kmeans {

namespace {

double sq_euclidean(const double* a, const double* b, std::size_t dim) {
    double s = 0.0;
    for (std::size_t i = 0; i < dim; ++i) {
        const double diff = a[i] - b[i];
        s += diff * diff;
    }
    return s;
}

std::vector<std::vector<double>> init_centroids(const std::vector<double>& matrix, std::size_t n,
                                                std::size_t dim, const KMeansConfig& cfg,
                                                Rng& rng) {
    std::vector<std::vector<double>> centroids;
    centroids.reserve(cfg.k);
    if (cfg.init == InitMode::UniformBox) {
        std::vector<double> lo(dim), hi(dim);
        for (std::size_t c = 0; c < dim; ++c) {
            lo[c] = hi[c] = matrix[c];
            for (std::size_t r = 1; r < n; ++r) {
                lo[c] = std::min(lo[c], matrix[r * dim + c]);
                hi[c] = std::max(hi[c], matrix[r * dim + c]);
            }
        }
        for (std::size_t j = 0; j < cfg.k; ++j) {
            std::vector<double> p(dim);
            for (std::size_t c = 0; c < dim; ++c) p[c] = rng.uniform(lo[c], hi[c]);
            centroids.push_back(std::move(p));
        }
        return centroids;
    }

    // k-means++ seeding: first center uniform, then D^2 sampling.
    std::size_t first = static_cast<std::size_t>(rng.uniform_index(n));
    centroids.emplace_back(matrix.begin() + first * dim, matrix.begin() + (first + 1) * dim);
    std::vector<double> dist2(n);
    for (std::size_t r = 0; r < n; ++r)
        dist2[r] = sq_euclidean(matrix.data() + r * dim, centroids[0].data(), dim);
    while (centroids.size() < cfg.k) {
        double total = 0.0;
        for (double d : dist2) total += d;
        std::size_t pick;
        if (total <= 0.0) {
            pick = static_cast<std::size_t>(rng.uniform_index(n));  // all points covered
        } else {
            pick = rng.weighted_index(dist2);
        }
        centroids.emplace_back(matrix.begin() + pick * dim, matrix.begin() + (pick + 1) * dim);
        const double* c = centroids.back().data();
        for (std::size_t r = 0; r < n; ++r)
            dist2[r] = std::min(dist2[r], sq_euclidean(matrix.data() + r * dim, c, dim));
    }
    return centroids;
}

struct LloydRun {
    std::vector<std::size_t> assignments;
    std::vector<std::vector<double>> centroids;
    std::vector<std::size_t> sizes;
    double wcss = 0.0;
};

LloydRun lloyd(const std::vector<double>& matrix, std::size_t n, std::size_t dim,
               const KMeansConfig& cfg, std::uint64_t seed) {
    Rng rng(seed);
    LloydRun run;
    run.centroids = init_centroids(matrix, n, dim, cfg, rng);
    run.assignments.assign(n, 0);
    run.sizes.assign(cfg.k, 0);

    for (std::size_t iter = 0; iter < cfg.max_iters; ++iter) {
        // Assignment; ties go to the lowest cluster index.
        std::fill(run.sizes.begin(), run.sizes.end(), 0);
        for (std::size_t r = 0; r < n; ++r) {
            double best = std::numeric_limits<double>::infinity();
            std::size_t best_j = 0;
            for (std::size_t j = 0; j < cfg.k; ++j) {
                const double d = sq_euclidean(matrix.data() + r * dim, run.centroids[j].data(), dim);
                if (d < best) {
                    best = d;
                    best_j = j;
                }
            }
            run.assignments[r] = best_j;
            ++run.sizes[best_j];
        }

        // Empty cluster repair: the point farthest from its own centroid
        // becomes the new centroid of the empty cluster.
        for (std::size_t j = 0; j < cfg.k; ++j) {
            if (run.sizes[j] > 0) continue;
            double worst = -1.0;
            std::size_t worst_r = 0;
            for (std::size_t r = 0; r < n; ++r) {
                if (run.sizes[run.assignments[r]] <= 1) continue;
                const double d = sq_euclidean(matrix.data() + r * dim,
                                              run.centroids[run.assignments[r]].data(), dim);
                if (d > worst) {
                    worst = d;
                    worst_r = r;
                }
            }
            if (worst < 0.0) continue;  // no donor cluster with more than one member
            --run.sizes[run.assignments[worst_r]];
            run.assignments[worst_r] = j;
            run.sizes[j] = 1;
            run.centroids[j].assign(matrix.begin() + worst_r * dim,
                                    matrix.begin() + (worst_r + 1) * dim);
        }

        // Update step.
        std::vector<std::vector<double>> next(cfg.k, std::vector<double>(dim, 0.0));
        for (std::size_t r = 0; r < n; ++r) {
            auto& c = next[run.assignments[r]];
            const double* row = matrix.data() + r * dim;
            for (std::size_t i = 0; i < dim; ++i) c[i] += row[i];
        }
        double max_move2 = 0.0;
        for (std::size_t j = 0; j < cfg.k; ++j) {
            if (run.sizes[j] == 0) continue;
            for (double& v : next[j]) v /= static_cast<double>(run.sizes[j]);
            max_move2 = std::max(max_move2, sq_euclidean(next[j].data(), run.centroids[j].data(), dim));
            run.centroids[j] = std::move(next[j]);
        }
        if (max_move2 < cfg.tol * cfg.tol) break;
    }

    // Final assignment against the converged centroids, and WCSS.
    std::fill(run.sizes.begin(), run.sizes.end(), 0);
    run.wcss = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
        double best = std::numeric_limits<double>::infinity();
        std::size_t best_j = 0;
        for (std::size_t j = 0; j < cfg.k; ++j) {
            const double d = sq_euclidean(matrix.data() + r * dim, run.centroids[j].data(), dim);
            if (d < best) {
                best = d;
                best_j = j;
            }
        }
        run.assignments[r] = best_j;
        ++run.sizes[best_j];
        run.wcss += best;
    }
    return run;
}

}  // namespace

void PonderVector::check(std::size_t dim) const {
    if (weights.size() != dim)
        throw_config("ponder vector length " + std::to_string(weights.size()) +
                     " does not match feature count " + std::to_string(dim));
    bool any_positive = false;
    for (double w : weights) {
        if (w < 0.0) throw_config("ponder weights must be non-negative");
        if (w > 0.0) any_positive = true;
    }
    if (!any_positive) throw_config("at least one ponder weight must be positive");
}

PonderVector PonderVector::ones(std::size_t dim) {
    return PonderVector{std::vector<double>(dim, 1.0)};
}

std::size_t KMeansConfig::effective_small_threshold(std::size_t n) const {
    if (small_threshold > 0) return small_threshold;
    return std::max<std::size_t>(1, n / 20);
}

std::size_t KMeansConfig::effective_max_outliers(std::size_t n) const {
    if (max_outliers > 0) return max_outliers;
    return std::max<std::size_t>(1, n / 20);
}

double weighted_distance(std::span<const double> p, std::span<const double> q,
                         const PonderVector& w) {
    if (p.size() != q.size() || p.size() != w.weights.size())
        throw_data("weighted_distance: length mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double diff = p[i] - q[i];
        s += w.weights[i] * w.weights[i] * diff * diff;
    }
    return std::sqrt(s);
}

std::vector<double> apply_ponders(const ScaledDataset& data, const PonderVector& w) {
    w.check(data.dim());
    std::vector<double> out = data.values();
    const std::size_t dim = data.dim();
    for (std::size_t r = 0; r < data.size(); ++r)
        for (std::size_t c = 0; c < dim; ++c) out[r * dim + c] *= w.weights[c];
    return out;
}

double outlierness(std::span<const double> small_centroid,
                   const std::vector<std::vector<double>>& large_centroids) {
    if (large_centroids.empty())
        throw_numeric(
            "outlierness undefined: every cluster is small; rerun with a smaller "
            "small-cluster threshold S");
    double best = std::numeric_limits<double>::infinity();
    for (const auto& c : large_centroids)
        best = std::min(best, std::sqrt(sq_euclidean(small_centroid.data(), c.data(),
                                                     small_centroid.size())));
    return best;
}

ClusteringResult cluster(const std::vector<double>& matrix, std::size_t n, std::size_t dim,
                         const KMeansConfig& cfg) {
    if (cfg.k < 2) throw_config("K must be at least 2");
    if (cfg.k >= n) throw_config("K must be smaller than the instance count");

    LloydRun best;
    bool have = false;
    for (std::size_t restart = 0; restart < std::max<std::size_t>(1, cfg.n_init); ++restart) {
        LloydRun run = lloyd(matrix, n, dim, cfg, cfg.seed + restart);
        if (!have || run.wcss < best.wcss) {
            best = std::move(run);
            have = true;
        }
    }

    ClusteringResult result;
    result.assignments = std::move(best.assignments);
    result.centroids = std::move(best.centroids);
    result.cluster_sizes = std::move(best.sizes);
    result.wcss = best.wcss;

    const std::size_t small_S = cfg.effective_small_threshold(n);
    std::vector<std::vector<double>> large_centroids;
    std::vector<std::size_t> small_indices;
    for (std::size_t j = 0; j < cfg.k; ++j) {
        if (result.cluster_sizes[j] >= small_S)
            large_centroids.push_back(result.centroids[j]);
        else
            small_indices.push_back(j);
    }
    for (std::size_t j : small_indices) {
        SmallCluster sc;
        sc.cluster = j;
        sc.outlierness = outlierness(result.centroids[j], large_centroids);
        for (std::size_t r = 0; r < n; ++r)
            if (result.assignments[r] == j) sc.members.push_back(r);
        result.small_clusters.push_back(std::move(sc));
    }
    // Descending outlierness; equal scores break ties by ascending cluster index.
    std::stable_sort(result.small_clusters.begin(), result.small_clusters.end(),
                     [](const SmallCluster& a, const SmallCluster& b) {
                         if (a.outlierness != b.outlierness) return a.outlierness > b.outlierness;
                         return a.cluster < b.cluster;
                     });
    return result;
}

OutlierSet select_outliers(const ClusteringResult& result, const KMeansConfig& cfg,
                           const std::vector<std::string>& ids) {
    const std::size_t budget = cfg.effective_max_outliers(ids.size());
    OutlierSet out;
    out.provenance = "kmeans";
    std::size_t taken = 0;
    for (const auto& sc : result.small_clusters) {
        if (taken + sc.members.size() > budget) break;  // stop at the first non-fitting cluster
        for (std::size_t r : sc.members) out.entries.push_back({ids[r], sc.outlierness});
        taken += sc.members.size();
    }
    return out;
}

OutlierSet detect(const Dataset& data, const PonderVector& w, const KMeansConfig& cfg) {
    const ScaledDataset scaled = scale_to_unit(data);
    const std::vector<double> matrix = apply_ponders(scaled, w);
    const ClusteringResult result = cluster(matrix, data.size(), data.dim(), cfg);
    return select_outliers(result, cfg, data.ids());
}

}  // namespace hunod::kmeans
