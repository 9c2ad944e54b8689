/*
 * SPDX-License-Identifier: Apache-2.0
 */
#pragma once

#include <set>
#include <string>
#include <vector>

namespace hunod {

/// Flagged instances with per-instance outlierness scores and provenance.
struct OutlierSet {
    struct Entry {
        std::string id;
        double score = 0.0;
    };

    std::string provenance;  // "kmeans" | "autoencoder"
    std::vector<Entry> entries;

    std::size_t size() const { return entries.size(); }
    bool contains(const std::string& id) const;
    std::set<std::string> id_set() const;
};

/// |A n B| / |A u B|; both sets empty -> 1.0 (two detectors agreeing on
/// "no outliers" is perfect agreement, the 0/0 case of the ratio).
double jaccard(const std::set<std::string>& a, const std::set<std::string>& b);

std::size_t intersection_size(const std::set<std::string>& a, const std::set<std::string>& b);

/// Pairwise Jaccard over a list of outlier id sets; symmetric, unit diagonal.
std::vector<std::vector<double>> agreement_matrix(const std::vector<std::set<std::string>>& sets);

}  // namespace hunod
