/*
 * SPDX-License-Identifier: Apache-2.0
 */
#pragma once

#include <string>
#include <vector>

#include "hunod/csv.hpp"

namespace hunod {

enum class FeatureKind { Numeric, OneHotDerived };

/// Ordered, immutable description of the feature columns of a dataset.
struct FeatureSchema {
    std::vector<std::string> names;
    std::vector<FeatureKind> kinds;

    std::size_t dim() const { return names.size(); }
    std::size_t index_of(const std::string& name) const;  // throws Data error if absent

    static FeatureSchema numeric(std::vector<std::string> names);
};

/// Instances with real-valued features, row-major. Construction rejects
/// NaN/infinite cells and duplicate ids; instances are immutable afterwards.
class Dataset {
public:
    Dataset(FeatureSchema schema, std::vector<std::string> ids, std::vector<double> values);

    const FeatureSchema& schema() const { return schema_; }
    const std::vector<std::string>& ids() const { return ids_; }
    std::size_t size() const { return ids_.size(); }
    std::size_t dim() const { return schema_.dim(); }

    double at(std::size_t row, std::size_t col) const { return values_[row * dim() + col]; }
    const double* row(std::size_t r) const { return values_.data() + r * dim(); }
    const std::vector<double>& values() const { return values_; }

private:
    FeatureSchema schema_;
    std::vector<std::string> ids_;
    std::vector<double> values_;
};

/// Per-column affine map of a Dataset into [0,1]. Constant columns map to 0.
class ScaledDataset {
public:
    explicit ScaledDataset(const Dataset& base);

    const FeatureSchema& schema() const { return schema_; }
    const std::vector<std::string>& ids() const { return ids_; }
    std::size_t size() const { return ids_.size(); }
    std::size_t dim() const { return schema_.dim(); }

    double at(std::size_t row, std::size_t col) const { return values_[row * dim() + col]; }
    const double* row(std::size_t r) const { return values_.data() + r * dim(); }
    const std::vector<double>& values() const { return values_; }

    double column_min(std::size_t col) const { return mins_[col]; }
    double column_max(std::size_t col) const { return maxs_[col]; }

    /// The scaled values repackaged as a plain Dataset (used where a detector
    /// consumes unit-interval features as its input space).
    Dataset as_dataset() const;

private:
    FeatureSchema schema_;
    std::vector<std::string> ids_;
    std::vector<double> values_;
    std::vector<double> mins_, maxs_;
};

/// Mixed-type input table prior to one-hot expansion.
struct RawColumn {
    std::string name;
    bool categorical = false;
    std::vector<double> numeric;         // used when !categorical
    std::vector<std::string> categories; // used when categorical
};

struct RawTable {
    std::vector<std::string> ids;
    std::vector<RawColumn> columns;
};

/// Expands categorical columns into `<col>_<value>` binary columns (values
/// ordered lexicographically); numeric columns pass through unchanged.
Dataset one_hot_encode(const RawTable& raw);

ScaledDataset scale_to_unit(const Dataset& data);

/// Numeric feature CSV (id column first, then one column per feature).
Dataset dataset_from_csv(const csv::Table& table, const std::string& id_column = "tin");
csv::Table dataset_to_csv(const Dataset& data, const std::string& id_column = "tin");

}  // namespace hunod
