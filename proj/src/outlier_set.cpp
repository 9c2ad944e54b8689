/*
 * SPDX-License-Identifier: Apache-2.0
 */
#include "hunod/outlier_set.hpp"

#include <algorithm>

namespace hunod {

bool OutlierSet::contains(const std::string& id) const {
    return std::any_of(entries.begin(), entries.end(),
                       [&id](const Entry& e) { return e.id == id; });
}

std::set<std::string> OutlierSet::id_set() const {
    std::set<std::string> ids;
    for (const auto& e : entries) ids.insert(e.id);
    return ids;
}

std::size_t intersection_size(const std::set<std::string>& a, const std::set<std::string>& b) {
    std::size_t n = 0;
    for (const auto& id : a) n += b.count(id);
    return n;
}

double jaccard(const std::set<std::string>& a, const std::set<std::string>& b) {
    const std::size_t inter = intersection_size(a, b);
    const std::size_t uni = a.size() + b.size() - inter;
    if (uni == 0) return 1.0;
    return static_cast<double>(inter) / static_cast<double>(uni);
}

std::vector<std::vector<double>> agreement_matrix(const std::vector<std::set<std::string>>& sets) {
    const std::size_t n = sets.size();
    std::vector<std::vector<double>> m(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i; j < n; ++j)
            m[i][j] = m[j][i] = jaccard(sets[i], sets[j]);
    return m;
}

}  // namespace hunod
